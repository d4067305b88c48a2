"""Batch reward-scoring HTTP service.

Endpoints (JSON bodies, versioned under /v1): POST /v1/score, POST /v1/legal,
POST /v1/diag/board-state, POST /v1/diag/two-candidate, GET /healthz.
Scoring is stateless: oracle answers travel inside each request item, items
are processed independently (one bad item never fails the batch), and the
response preserves request order.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .core import legal_moves, parse_fen
from .critics import HeuristicCritic, OracleCritic, UciEnginePool
from .errors import (
    ChessrlError,
    ConfigError,
    EngineSpawnError,
    EngineTimeout,
    IllegalPosition,
    MalformedFen,
    UnknownPosition,
)
from .evaluation import corpus_fens, gen_tasks
from .prompts import PROMPT_CONFIGS
from .puzzles import PositionSample, ingest_csv
from .rewards import resolve_preset, score_move
from .prompts import extract_move, parse_output

log = logging.getLogger("chessrl.service")

DEFAULT_DIAG_CORPUS = Path(__file__).parent / "data" / "diag_corpus.txt"


@dataclass
class ServiceConfig:
    """Service settings; file values are overridden by CHESSRL_* env vars."""

    host: str = "127.0.0.1"
    port: int = 8000
    default_backend: str = "heuristic-d1"
    heuristic_depths: tuple[int, ...] = (0, 1, 2)
    uci_engine_cmd: str | None = None
    uci_movetime_ms: int = 100
    pool_size: int = 2
    pool_timeout_s: float = 30.0
    max_batch: int = 512
    diag_corpus_path: str | None = None

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ServiceConfig":
        values: dict = {}
        if path is not None:
            values.update(json.loads(Path(path).read_text()))
        env_map = {
            "host": ("CHESSRL_HOST", str),
            "port": ("CHESSRL_PORT", int),
            "default_backend": ("CHESSRL_BACKEND", str),
            "uci_engine_cmd": ("CHESSRL_UCI_ENGINE", str),
            "uci_movetime_ms": ("CHESSRL_UCI_MOVETIME_MS", int),
            "pool_size": ("CHESSRL_POOL_SIZE", int),
            "pool_timeout_s": ("CHESSRL_POOL_TIMEOUT_S", float),
            "max_batch": ("CHESSRL_MAX_BATCH", int),
            "diag_corpus_path": ("CHESSRL_DIAG_CORPUS", str),
        }
        for key, (env, cast) in env_map.items():
            raw = os.environ.get(env)
            if raw is not None:
                values[key] = cast(raw)
        if "heuristic_depths" in values:
            values["heuristic_depths"] = tuple(values["heuristic_depths"])
        return cls(**values)


class ScoreItem(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fen: str
    raw_output: str
    optimal_san: str | None = None
    prompt_cfg_id: str = "default"


class ScoreRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    items: list[ScoreItem]
    weights_preset: str = "sparse"
    backend_id: str | None = None


class LegalRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fen: str


class BoardStateDiagRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    count: int = Field(default=1, ge=1, le=10_000)
    k: int = Field(default=3, ge=1, le=5)
    seed: int = 0
    fens: list[str] | None = None


class TwoCandidateDiagRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    count: int = Field(default=1, ge=1, le=10_000)
    seed: int = 0
    margin: float = 0.2
    backend_id: str | None = None
    fens: list[str] | None = None


class Backends:
    """Backend registry; 'oracle' is materialized per item from optimal_san."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.fixed = {f"heuristic-d{d}": HeuristicCritic(d) for d in config.heuristic_depths}
        self.pool: UciEnginePool | None = None
        if config.uci_engine_cmd:
            self.pool = UciEnginePool(config.uci_engine_cmd, config.uci_movetime_ms,
                                      config.pool_size)
        self.ids = sorted(self.fixed) + ["oracle"] + (["uci"] if self.pool else [])

    def close(self) -> None:
        if self.pool is not None:
            self.pool.close()


def _score_one(item: ScoreItem, preset: str, backend_id: str, backends: Backends) -> dict:
    weights, dense_mode = resolve_preset(preset)
    try:
        state = parse_fen(item.fen)
    except (MalformedFen, IllegalPosition) as exc:
        return {"ok": False, "error": {"code": "invalid_fen", "message": str(exc)}}
    cfg = PROMPT_CONFIGS.get(item.prompt_cfg_id)
    if cfg is None:
        return {"ok": False, "error": {"code": "unknown_prompt_cfg",
                                       "message": item.prompt_cfg_id}}
    optimal = None
    if item.optimal_san is not None:
        try:
            from .core import parse_san

            optimal = parse_san(state, item.optimal_san)
        except ChessrlError as exc:
            return {"ok": False, "error": {"code": "invalid_optimal_san", "message": str(exc)}}
    sample = PositionSample(
        puzzle_id="request", ply_index=0, state=state, optimal_move=optimal,
        solver_side=state.side_to_move, is_solver_move=True, rating=0,
    )
    parsed = parse_output(item.raw_output)
    extracted = extract_move(parsed, state, cfg)

    def run(backend) -> dict:
        breakdown = score_move(sample, extracted, weights, backend, dense_mode,
                               fmt_ok=parsed.format_ok, lang_ok=parsed.english_ok)
        return {
            "ok": True,
            "r_sparse": breakdown.r_sparse,
            "r_dense": breakdown.r_dense,
            "r_fmt": breakdown.r_fmt,
            "r_lang": breakdown.r_lang,
            "total": breakdown.total,
            "extracted_san": extracted.san if extracted else None,
            "extracted_uci": extracted.uci if extracted else None,
            "extracted_legal": extracted is not None,
        }

    try:
        if backend_id == "oracle":
            answers = {item.fen: item.optimal_san} if item.optimal_san else {}
            return run(OracleCritic(answers))
        if backend_id == "uci":
            if backends.pool is None:
                return {"ok": False, "error": {"code": "unknown_backend", "message": "uci"}}
            with backends.pool.acquire(timeout=backends.config.pool_timeout_s) as handle:
                return run(handle)
        backend = backends.fixed.get(backend_id)
        if backend is None:
            return {"ok": False, "error": {"code": "unknown_backend", "message": backend_id}}
        return run(backend)
    except UnknownPosition as exc:
        return {"ok": False, "error": {"code": "unknown_position", "message": str(exc)}}
    except ConfigError as exc:
        return {"ok": False, "error": {"code": "config_error", "message": str(exc)}}


def score_batch(request: ScoreRequest, backends: Backends) -> list[dict]:
    """In-process core of /v1/score: element-wise, order-preserving."""
    backend_id = request.backend_id or backends.config.default_backend
    return [_score_one(item, request.weights_preset, backend_id, backends)
            for item in request.items]


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    backends = Backends(config)
    app = FastAPI(title="chessrl reward service", version=__version__)
    app.state.config = config
    app.state.backends = backends

    corpus_path = config.diag_corpus_path or DEFAULT_DIAG_CORPUS
    try:
        diag_corpus = [line.strip() for line in Path(corpus_path).read_text().splitlines()
                       if line.strip()]
    except FileNotFoundError:
        diag_corpus = []
    app.state.diag_corpus = diag_corpus

    @app.exception_handler(RequestValidationError)
    async def schema_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.middleware("http")
    async def access_log(request: Request, call_next):
        started = time.monotonic()
        response = await call_next(request)
        log.info("%s %s -> %d (%.1f ms)", request.method, request.url.path,
                 response.status_code, (time.monotonic() - started) * 1000)
        return response

    @app.get("/healthz")
    @app.get("/v1/healthz")
    def healthz():
        return {"status": "ok", "version": __version__, "backends": backends.ids}

    @app.post("/v1/score")
    def score_endpoint(request: ScoreRequest):
        started = time.monotonic()
        if len(request.items) > config.max_batch:
            return JSONResponse(status_code=400, content={
                "detail": f"batch of {len(request.items)} exceeds max {config.max_batch}"})
        if request.weights_preset not in ("sparse", "dense", "rank"):
            return JSONResponse(status_code=400, content={
                "detail": f"unknown weights preset {request.weights_preset!r}"})
        try:
            items = score_batch(request, backends)
        except (EngineSpawnError, EngineTimeout) as exc:
            return JSONResponse(status_code=503, content={"detail": str(exc)})
        fen_failures = [i for i, item in enumerate(items)
                        if not item["ok"] and item["error"]["code"] == "invalid_fen"]
        if items and len(fen_failures) == len(items):
            return JSONResponse(status_code=422, content={
                "detail": "every item has an invalid FEN", "rows": fen_failures})
        return {
            "items": items,
            "metadata": {
                "backend_id": request.backend_id or config.default_backend,
                "weights_preset": request.weights_preset,
                "version": __version__,
                "latency_ms": round((time.monotonic() - started) * 1000, 3),
            },
        }

    @app.post("/v1/legal")
    def legal_endpoint(request: LegalRequest):
        try:
            pos = parse_fen(request.fen)
        except (MalformedFen, IllegalPosition) as exc:
            return JSONResponse(status_code=422, content={"detail": str(exc)})
        moves = legal_moves(pos)
        return {"fen": request.fen, "legal_san": [m.san for m in moves],
                "legal_uci": [m.uci for m in moves]}

    def _diag_fens(supplied: list[str] | None) -> list[str] | JSONResponse:
        fens = supplied if supplied else app.state.diag_corpus
        if not fens:
            return JSONResponse(status_code=400, content={
                "detail": "no diagnostic corpus configured; supply fens"})
        for fen in fens:
            try:
                parse_fen(fen)
            except (MalformedFen, IllegalPosition) as exc:
                return JSONResponse(status_code=422, content={"detail": f"{fen}: {exc}"})
        return fens

    @app.post("/v1/diag/board-state")
    def diag_board_state(request: BoardStateDiagRequest):
        fens = _diag_fens(request.fens)
        if isinstance(fens, JSONResponse):
            return fens
        tasks = gen_tasks("board_state", request.count, request.seed, fens, k=request.k)
        return {"tasks": tasks}

    @app.post("/v1/diag/two-candidate")
    def diag_two_candidate(request: TwoCandidateDiagRequest):
        fens = _diag_fens(request.fens)
        if isinstance(fens, JSONResponse):
            return fens
        backend_id = request.backend_id or config.default_backend
        backend = backends.fixed.get(backend_id)
        if backend is None:
            return JSONResponse(status_code=400, content={
                "detail": f"two-candidate generation needs a fixed backend, got {backend_id!r}"})
        tasks = gen_tasks("two_candidate", request.count, request.seed, fens,
                          backend=backend, margin=request.margin)
        return {"tasks": tasks}

    return app


def build_diag_corpus(puzzle_csv: str | Path, out_path: str | Path,
                      limit: int = 120) -> int:
    """Extract a diagnostic FEN corpus from a puzzle CSV."""
    fens = corpus_fens(ingest_csv(puzzle_csv))[:limit]
    Path(out_path).write_text("\n".join(fens) + "\n")
    return len(fens)


def serve(config: ServiceConfig | None = None) -> None:
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    config = config or ServiceConfig()
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
