"""Reward components and their weighted total for a (sample, output) pair.

Four components: exact-match (sparse), critic win probability (dense, with a
normalized-rank variant), tag formatting, and English-output.  The total is
the plain dot product with the configured coefficients; zero-weight
components are still computed so learning curves can log them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Move, legal_moves
from .critics import CriticBackend
from .errors import ConfigError, IllegalMove
from .prompts import PROMPT_CONFIGS, PromptConfig, extract_move, parse_output
from .puzzles import PositionSample

WINRATE, RANK = "winrate", "rank"


@dataclass(frozen=True)
class RewardWeights:
    lambda_sparse: float
    lambda_dense: float
    lambda_fmt: float = 0.1
    lambda_lang: float = 0.1


# name -> (weights, dense mode)
WEIGHT_PRESETS: dict[str, tuple[RewardWeights, str]] = {
    "sparse": (RewardWeights(1.0, 0.0), WINRATE),
    "dense": (RewardWeights(0.0, 1.0), WINRATE),
    "rank": (RewardWeights(0.0, 1.0), RANK),
}


def resolve_preset(name: str) -> tuple[RewardWeights, str]:
    try:
        return WEIGHT_PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown weights preset {name!r}") from None


@dataclass(frozen=True)
class RewardBreakdown:
    r_sparse: float
    r_dense: float
    r_fmt: float
    r_lang: float
    total: float
    extracted_move: Move | None


def sparse_reward(sample: PositionSample, extracted: Move | None) -> float:
    """1 iff the extracted move is the recorded best move (by from/to/promo)."""
    if extracted is None:
        return 0.0
    return 1.0 if extracted == sample.optimal_move else 0.0


def dense_reward(sample: PositionSample, extracted: Move | None,
                 backend: CriticBackend) -> float:
    """Critic win probability of the extracted move; 0 if absent or illegal."""
    if extracted is None:
        return 0.0
    try:
        return backend.score(sample.state, extracted).value
    except IllegalMove:
        return 0.0


def rank_reward(sample: PositionSample, extracted: Move | None,
                backend: CriticBackend, literal: bool = False) -> float:
    """Reward from the move's rank among all legal moves under the critic.

    Moves are ranked by descending critic value with ties broken by move-list
    order.  The default orientation pays 1 for the best-ranked move and 0 for
    the worst ((L - rank) / (L - 1)); literal=True selects the inverted
    (rank - 1) / (L - 1) form instead.  Single-move positions score 1
    (0 under literal); an absent or illegal move scores 0.
    """
    if extracted is None:
        return 0.0
    moves = legal_moves(sample.state)
    if extracted not in moves:
        return 0.0
    scores = backend.score_all(sample.state)
    ordering = sorted(range(len(moves)), key=lambda i: (-scores[moves[i]].value, i))
    rank = ordering.index(moves.index(extracted)) + 1  # 1 = best
    length = len(moves)
    if length == 1:
        return 0.0 if literal else 1.0
    if literal:
        return (rank - 1) / (length - 1)
    return (length - rank) / (length - 1)


def score_move(
    sample: PositionSample,
    extracted: Move | None,
    weights: RewardWeights,
    backend: CriticBackend | None = None,
    dense_mode: str = WINRATE,
    fmt_ok: bool = True,
    lang_ok: bool = True,
    rank_literal: bool = False,
) -> RewardBreakdown:
    """Score an already-extracted move (the text-free core of score()).

    Backend errors are swallowed (dense logged as 0) when the dense weight is
    zero and rank mode is off; otherwise they propagate.
    """
    dense_needed = weights.lambda_dense != 0.0 or dense_mode == RANK
    r_dense = 0.0
    if backend is None:
        if dense_needed:
            raise ConfigError("dense/rank reward requires a critic backend")
    else:
        try:
            if dense_mode == RANK:
                r_dense = rank_reward(sample, extracted, backend, literal=rank_literal)
            else:
                r_dense = dense_reward(sample, extracted, backend)
        except Exception:
            if dense_needed:
                raise
            r_dense = 0.0

    r_sparse = sparse_reward(sample, extracted)
    r_fmt = 1.0 if fmt_ok else 0.0
    r_lang = 1.0 if lang_ok else 0.0
    total = (
        weights.lambda_sparse * r_sparse
        + weights.lambda_dense * r_dense
        + weights.lambda_fmt * r_fmt
        + weights.lambda_lang * r_lang
    )
    return RewardBreakdown(r_sparse, r_dense, r_fmt, r_lang, total, extracted)


def score(
    sample: PositionSample,
    raw_output: str,
    weights: RewardWeights,
    cfg: PromptConfig | None = None,
    backend: CriticBackend | None = None,
    dense_mode: str = WINRATE,
    rank_literal: bool = False,
) -> RewardBreakdown:
    """Full text-path scoring: parse tags, extract the move, weight components."""
    cfg = cfg or PROMPT_CONFIGS["default"]
    parsed = parse_output(raw_output)
    extracted = extract_move(parsed, sample.state, cfg)
    return score_move(
        sample, extracted, weights, backend, dense_mode,
        fmt_ok=parsed.format_ok, lang_ok=parsed.english_ok,
        rank_literal=rank_literal,
    )
