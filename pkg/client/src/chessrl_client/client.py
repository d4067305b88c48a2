"""Synchronous client for the reward-scoring service's /v1 wire schema.

All reward values originate server-side; the client validates shapes,
retries transport failures and 503s (never 4xx), and hands results back in
request order.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field

import httpx

from .errors import SchemaError, ServiceError, TransportError

ITEM_REQUIRED = {"fen": str, "raw_output": str}
ITEM_OPTIONAL = {"optimal_san": str, "prompt_cfg_id": str}
PRESETS = ("sparse", "dense", "rank")

_FEN_IN_PROMPT = re.compile(r"The current FEN string is (\S+ [wb] \S+ \S+ \d+ \d+)")


@dataclass
class RetryPolicy:
    max_attempts: int = 3
    backoff_s: float = 0.1  # doubled per attempt

    def delays(self):
        for attempt in range(self.max_attempts):
            yield self.backoff_s * (2 ** attempt)


@dataclass
class ClientConfig:
    base_url: str = "http://127.0.0.1:8000"
    timeout_s: float = 30.0
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    weights_preset: str = "sparse"
    backend_id: str | None = None
    max_batch: int = 512

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.weights_preset not in PRESETS:
            raise ValueError(f"unknown weights preset {self.weights_preset!r}")


@dataclass
class ScoreResult:
    items: list[dict]
    metadata: dict
    raw_body: bytes

    def items_bytes(self) -> bytes:
        """Canonical bytes of the score payload (metadata excluded)."""
        return canonical_items_bytes(self.items)


def canonical_items_bytes(items: list[dict]) -> bytes:
    return json.dumps(items, sort_keys=True, separators=(",", ":")).encode()


def validate_items(items: list[dict], max_batch: int) -> None:
    """Reject client-side exactly what the service rejects with 400."""
    if not isinstance(items, list):
        raise SchemaError("items must be a list")
    if len(items) > max_batch:
        raise SchemaError(f"batch of {len(items)} exceeds max {max_batch}")
    allowed = set(ITEM_REQUIRED) | set(ITEM_OPTIONAL)
    for index, item in enumerate(items):
        if not isinstance(item, dict):
            raise SchemaError(f"item {index} is not an object")
        unknown = set(item) - allowed
        if unknown:
            raise SchemaError(f"item {index} has unknown fields {sorted(unknown)}")
        for key, kind in ITEM_REQUIRED.items():
            if key not in item:
                raise SchemaError(f"item {index} is missing {key!r}")
            if not isinstance(item[key], kind):
                raise SchemaError(f"item {index} field {key!r} must be {kind.__name__}")
        for key, kind in ITEM_OPTIONAL.items():
            if key in item and item[key] is not None and not isinstance(item[key], kind):
                raise SchemaError(f"item {index} field {key!r} must be {kind.__name__}")


class RewardClient:
    """Thread-safe handle to one service endpoint."""

    def __init__(self, config: ClientConfig | None = None, transport: httpx.BaseTransport | None = None):
        self.config = config or ClientConfig()
        self._http = httpx.Client(base_url=self.config.base_url,
                                  timeout=self.config.timeout_s,
                                  transport=transport)

    # --- plumbing ---

    def _post(self, path: str, payload: dict) -> httpx.Response:
        last_exc: Exception | None = None
        for delay in self.config.retry.delays():
            try:
                response = self._http.post(path, json=payload)
            except httpx.TransportError as exc:
                last_exc = exc
                time.sleep(delay)
                continue
            if response.status_code == 503:
                last_exc = ServiceError(503, response.text)
                time.sleep(delay)
                continue
            return response
        if isinstance(last_exc, ServiceError):
            raise last_exc
        raise TransportError(f"{path} unreachable after "
                             f"{self.config.retry.max_attempts} attempts: {last_exc}")

    @staticmethod
    def _check(response: httpx.Response) -> dict:
        if response.status_code >= 400:
            raise ServiceError(response.status_code, response.text)
        try:
            return response.json()
        except json.JSONDecodeError as exc:
            raise SchemaError(f"response is not JSON: {exc}") from exc

    # --- API surface ---

    def healthz(self) -> dict:
        try:
            response = self._http.get("/healthz")
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        return self._check(response)

    def score_detailed(self, items: list[dict], preset: str | None = None,
                       backend: str | None = None) -> ScoreResult:
        """Full response: ordered item breakdowns, metadata, raw body bytes."""
        validate_items(items, self.config.max_batch)
        preset = preset or self.config.weights_preset
        if preset not in PRESETS:
            raise SchemaError(f"unknown weights preset {preset!r}")
        payload: dict = {
            "items": items,
            "weights_preset": preset,
        }
        backend = backend if backend is not None else self.config.backend_id
        if backend is not None:
            payload["backend_id"] = backend
        response = self._post("/v1/score", payload)
        body = self._check(response)
        if "items" not in body or not isinstance(body["items"], list):
            raise SchemaError("response is missing the items array")
        if len(body["items"]) != len(items):
            raise SchemaError(f"response has {len(body['items'])} items "
                              f"for a {len(items)}-item request")
        return ScoreResult(body["items"], body.get("metadata", {}), response.content)

    def score(self, items: list[dict], preset: str | None = None,
              backend: str | None = None) -> list[dict]:
        """Order-preserving reward breakdowns for a batch of items."""
        return self.score_detailed(items, preset, backend).items

    def legal_moves(self, fen: str) -> dict:
        return self._check(self._post("/v1/legal", {"fen": fen}))

    def gen_board_state_tasks(self, count: int = 1, k: int = 3, seed: int = 0,
                              fens: list[str] | None = None) -> list[dict]:
        payload: dict = {"count": count, "k": k, "seed": seed}
        if fens is not None:
            payload["fens"] = fens
        return self._check(self._post("/v1/diag/board-state", payload))["tasks"]

    def gen_two_candidate_tasks(self, count: int = 1, seed: int = 0, margin: float = 0.2,
                                backend: str | None = None,
                                fens: list[str] | None = None) -> list[dict]:
        payload: dict = {"count": count, "seed": seed, "margin": margin}
        if backend is not None:
            payload["backend_id"] = backend
        if fens is not None:
            payload["fens"] = fens
        return self._check(self._post("/v1/diag/two-candidate", payload))["tasks"]

    def close(self) -> None:
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def _fen_of_prompt(prompt) -> dict:
    """Metadata dict from a prompt that is either a mapping or rendered text."""
    if isinstance(prompt, dict):
        if "fen" not in prompt:
            raise SchemaError("prompt dict must carry a 'fen' key")
        meta = {"fen": prompt["fen"]}
        if prompt.get("optimal_san"):
            meta["optimal_san"] = prompt["optimal_san"]
        if prompt.get("prompt_cfg_id"):
            meta["prompt_cfg_id"] = prompt["prompt_cfg_id"]
        return meta
    match = _FEN_IN_PROMPT.search(str(prompt))
    if match is None:
        raise SchemaError("prompt text does not contain a recognizable FEN")
    return {"fen": match.group(1)}


def reward_fn_adapter(config: ClientConfig | None = None,
                      client: RewardClient | None = None):
    """Callable(prompts, completions) -> list of scalar totals.

    The shape group-rollout trainers expect: one prompt with G completions
    (broadcast), or equal-length prompt/completion lists.  Item-level
    failures score 0.0.  All values come from the service; nothing is
    computed locally.
    """
    owner = client or RewardClient(config)

    def reward_fn(prompts, completions) -> list[float]:
        if not completions:
            return []
        if len(prompts) == 1 and len(completions) > 1:
            prompts = list(prompts) * len(completions)
        if len(prompts) != len(completions):
            raise SchemaError(f"{len(prompts)} prompts vs {len(completions)} completions")
        items = []
        for prompt, completion in zip(prompts, completions):
            item = _fen_of_prompt(prompt)
            item["raw_output"] = completion
            items.append(item)
        scored = owner.score(items)
        return [item["total"] if item.get("ok") else 0.0 for item in scored]

    return reward_fn
