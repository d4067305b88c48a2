"""Learning-dynamics fixture: graded teacher vs exact-match training runs.

Builds a fixture where each position's recorded best move is *defined* as
the argmax of a hidden linear teacher over the policy's own feature basis,
so (a) the answer is identifiable by the critic, (b) a feature-linear
policy can reach high greedy accuracy, and (c) the teacher's graded values
give informative feedback on sub-optimal moves, the way a pretrained
action-value network does.  Exact-match training sees the same answer key
through the sparse reward, making paired seed runs directly comparable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .core import Move, legal_moves, to_fen
from .critics import CriticBackend, CriticScore
from .errors import UnknownPosition
from .grpo import (
    FEATURE_DIM,
    TrainConfig,
    features_matrix,
    train,
)
from .puzzles import PositionSample

# Hidden teacher preferences: captures, checks, promotions, central targets.
DEFAULT_TEACHER_THETA = np.array([
    0.0, 0.2, 0.2, 0.1, -0.1, -0.3,  # piece moved (P N B R Q K)
    2.0,   # capture
    1.5,   # check
    2.5,   # promotion
    1.0,   # destination centrality
    0.5,   # mobility delta
    0.0,   # bias
])
assert DEFAULT_TEACHER_THETA.shape == (FEATURE_DIM,)


class TabulatedCritic(CriticBackend):
    """Backend serving precomputed values: {fen: {move key: value}}."""

    backend_id = "tabulated"

    def __init__(self, table: dict[str, dict[tuple, float]]):
        self.table = table

    def score(self, pos, move: Move) -> CriticScore:
        fen = to_fen(pos)
        if fen not in self.table:
            raise UnknownPosition(f"no tabulated values for {fen}")
        return CriticScore(self.table[fen][move.key()], self.backend_id, 0)


@dataclass
class DynamicsFixture:
    samples: list[PositionSample]
    teacher: TabulatedCritic
    answers: dict[str, str]  # fen -> optimal SAN


def build_fixture(
    count: int = 200,
    seed: int = 0,
    *,
    teacher_theta: np.ndarray | None = None,
    min_moves: int = 12,
    margin: float = 1.5,
    value_scale: float = 1.0,
) -> DynamicsFixture:
    """Sample mid-game positions whose teacher argmax clears `margin`.

    The teacher value of a move is sigmoid(value_scale * theta_T . phi);
    positions are random playouts from the start, filtered for enough legal
    moves and a clear top-2 teacher gap so the target is unambiguous.
    """
    theta_t = DEFAULT_TEACHER_THETA if teacher_theta is None else teacher_theta
    rng = random.Random(seed)
    samples: list[PositionSample] = []
    table: dict[str, dict[tuple, float]] = {}
    answers: dict[str, str] = {}
    seen: set[str] = set()

    from .core import apply_move, start_position

    while len(samples) < count:
        pos = start_position()
        for _ in range(rng.randint(10, 60)):
            moves = legal_moves(pos)
            if not moves:
                break
            pos = apply_move(pos, moves[rng.randrange(len(moves))])
        moves = legal_moves(pos)
        fen = to_fen(pos)
        if len(moves) < min_moves or fen in seen:
            continue
        features = features_matrix(pos, moves)
        logits = features @ theta_t
        order = np.argsort(-logits)
        if logits[order[0]] - logits[order[1]] < margin:
            continue
        seen.add(fen)
        best = moves[int(order[0])]
        values = 1.0 / (1.0 + np.exp(-value_scale * logits))
        table[fen] = {mv.key(): float(v) for mv, v in zip(moves, values)}
        answers[fen] = best.san
        samples.append(PositionSample(
            puzzle_id=f"dyn{len(samples):04d}", ply_index=0, state=pos,
            optimal_move=best, solver_side=pos.side_to_move,
            is_solver_move=True, rating=1500,
        ))
    return DynamicsFixture(samples, TabulatedCritic(table), answers)


def steps_to_accuracy(metrics: list[dict], target: float) -> int | None:
    """First 1-based step whose eval_accuracy reached the target."""
    for record in metrics:
        if record.get("eval_accuracy", 0.0) >= target:
            return record["step"] + 1
    return None


@dataclass
class PairedRun:
    seed: int
    dense_steps: int | None
    sparse_steps: int | None
    dense_final: float
    sparse_final: float

    @property
    def dense_faster(self) -> bool:
        if self.dense_steps is None:
            return False
        return self.sparse_steps is None or self.dense_steps < self.sparse_steps


INIT_ANTI_SCALE = 0.45  # policy starts anti-aligned with the teacher


def anti_teacher_init(teacher_theta: np.ndarray | None = None) -> np.ndarray:
    """Initial weights pointing away from the teacher's preferences.

    This puts the recorded best moves in the policy's low-probability tail,
    the regime where exact-match rewards go silent (whole groups score
    identically and are skipped) while graded critic feedback keeps ranking
    whatever was sampled.  Both runs of a pair share the same start.
    """
    theta_t = DEFAULT_TEACHER_THETA if teacher_theta is None else teacher_theta
    return -INIT_ANTI_SCALE * theta_t


def run_pair(
    fixture: DynamicsFixture,
    seed: int,
    cfg: TrainConfig | None = None,
    target: float = 0.5,
    initial_theta: np.ndarray | None = None,
) -> PairedRun:
    """Train the same fixture with graded-critic and exact-match rewards."""
    cfg = cfg or dynamics_config(seed)
    cfg_pair = TrainConfig(**{**cfg.__dict__, "seed": seed})
    init = anti_teacher_init() if initial_theta is None else initial_theta
    dense = train(fixture.samples, "dense", fixture.teacher, cfg_pair, initial_theta=init)
    sparse = train(fixture.samples, "sparse", None, cfg_pair, initial_theta=init)
    return PairedRun(
        seed=seed,
        dense_steps=steps_to_accuracy(dense.metrics, target),
        sparse_steps=steps_to_accuracy(sparse.metrics, target),
        dense_final=max(r.get("eval_accuracy", 0.0) for r in dense.metrics),
        sparse_final=max(r.get("eval_accuracy", 0.0) for r in sparse.metrics),
    )


def dynamics_config(seed: int = 0, steps: int = 2000) -> TrainConfig:
    """Small-batch trainer settings used by the dynamics experiment."""
    return TrainConfig(
        steps=steps, batch_size=2, group_size=8, temperature=1.0,
        lr=3e-2, clip_ratio=0.2, kl_coef=1e-3, entropy_coef=1e-3,
        grad_clip=1.0, seed=seed, eval_every=1,
    )
