"""Desk-scale group-relative policy trainer over a feature-linear move policy.

The policy is a softmax over legal moves with logits theta . phi(s, a) / T,
so one sampled move is one episode and the update is the bandit form of the
clipped-surrogate objective: group-normalized advantages, probability-ratio
clipping, an exact categorical KL penalty to a frozen reference, and an
entropy bonus.  Everything is analytic and seeded, which keeps gradient
checks and paired-seed experiments exact.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import Move, Position, apply_move, is_check, legal_moves
from .core.movegen import MutableBoard
from .errors import NoLegalMoves, NonFiniteGradient
from .puzzles import PositionSample
from .rewards import RewardWeights, resolve_preset, score_move

ADVANTAGE_EPS = 1e-8

FEATURE_NAMES = (
    "moved_pawn", "moved_knight", "moved_bishop", "moved_rook", "moved_queen",
    "moved_king", "is_capture", "gives_check", "is_promotion",
    "destination_centrality", "mobility_delta", "bias",
)
FEATURE_DIM = len(FEATURE_NAMES)


@dataclass
class PolicyParams:
    """Weight vector over the fixed move-feature basis."""

    theta: np.ndarray

    @classmethod
    def zeros(cls) -> "PolicyParams":
        return cls(np.zeros(FEATURE_DIM))


def move_features(pos: Position, move: Move) -> np.ndarray:
    """phi(s, a): piece one-hot, capture/check/promotion flags, centrality,
    mover mobility delta, bias."""
    phi = np.zeros(FEATURE_DIM)
    kind = abs(pos.board[move.from_sq])
    phi[kind - 1] = 1.0
    target = pos.board[move.to_sq]
    is_ep = kind == 1 and pos.ep_square == move.to_sq and target == 0
    if target != 0 or is_ep:
        phi[6] = 1.0
    successor = apply_move(pos, move)
    if is_check(successor):
        phi[7] = 1.0
    if move.promotion:
        phi[8] = 1.0
    file, rank = move.to_sq & 7, move.to_sq >> 3
    phi[9] = (3.5 - max(abs(file - 3.5), abs(rank - 3.5))) / 3.5
    mover_white = pos.white_to_move
    before = MutableBoard(pos).count_mobility(mover_white)
    after = MutableBoard(successor).count_mobility(mover_white)
    phi[10] = (after - before) / 10.0
    phi[11] = 1.0
    return phi


def features_matrix(pos: Position, moves: list[Move] | None = None) -> np.ndarray:
    moves = moves if moves is not None else legal_moves(pos)
    if not moves:
        raise NoLegalMoves(f"no legal moves in {pos.fen()}")
    return np.stack([move_features(pos, mv) for mv in moves])


def softmax_logits(features: np.ndarray, theta: np.ndarray, temperature: float) -> np.ndarray:
    z = features @ theta / temperature
    z = z - z.max()
    p = np.exp(z)
    return p / p.sum()


def policy_distribution(theta: np.ndarray, pos: Position,
                        temperature: float = 1.0) -> tuple[list[Move], np.ndarray]:
    """Move-list and its softmax probabilities (sum to 1 within 1e-12)."""
    moves = legal_moves(pos)
    if not moves:
        raise NoLegalMoves(f"no legal moves in {pos.fen()}")
    return moves, softmax_logits(features_matrix(pos, moves), theta, temperature)


@dataclass
class GroupRollout:
    """G sampled actions for one prompt, with rewards and advantages."""

    sample_ref: str
    actions: list[Move]
    action_indices: np.ndarray
    logprobs_old: np.ndarray
    features: np.ndarray  # (L, d) for the whole move list
    rewards: np.ndarray | None = None
    advantages: np.ndarray | None = None


@dataclass
class TrainConfig:
    """Trainer hyperparameters (toy learning rate; see module docstring)."""

    steps: int = 150
    batch_size: int = 128
    group_size: int = 8
    temperature: float = 1.0
    lr: float = 1e-2
    clip_ratio: float = 0.2
    kl_coef: float = 1e-3
    entropy_coef: float = 1e-3
    grad_clip: float = 1.0
    seed: int = 0
    optimizer: str = "sgd"  # or "adamw"
    weight_decay: float = 0.0
    eval_every: int = 0
    init_scale: float = 0.0  # stddev of the seeded random theta_0 (0 = zeros)


def compute_advantages(rewards: np.ndarray) -> np.ndarray:
    """(r - mean) / (population std + eps); all-equal groups give all zeros."""
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size == 0 or np.all(rewards == rewards.flat[0]):
        return np.zeros_like(rewards)
    centered = rewards - rewards.mean()
    return centered / (rewards.std() + ADVANTAGE_EPS)


def sample_group(
    theta: np.ndarray,
    sample: PositionSample,
    group_size: int,
    temperature: float,
    rng: np.random.Generator,
    features: np.ndarray | None = None,
    moves: list[Move] | None = None,
) -> GroupRollout:
    """Draw G i.i.d. actions, recording their log-probabilities."""
    moves = moves if moves is not None else legal_moves(sample.state)
    if not moves:
        raise NoLegalMoves(f"no legal moves in {sample.fen}")
    features = features if features is not None else features_matrix(sample.state, moves)
    probs = softmax_logits(features, theta, temperature)
    indices = rng.choice(len(moves), size=group_size, p=probs)
    return GroupRollout(
        sample_ref=f"{sample.puzzle_id}:{sample.ply_index}",
        actions=[moves[i] for i in indices],
        action_indices=np.asarray(indices),
        logprobs_old=np.log(probs[indices]),
        features=features,
    )


def objective_and_grad(
    theta: np.ndarray,
    ref_theta: np.ndarray,
    rollouts: list[GroupRollout],
    cfg: TrainConfig,
) -> tuple[float, np.ndarray, dict]:
    """Objective value, analytic gradient, and per-step metrics.

    Objective = mean over sampled actions of min(rho*A, clip(rho)*A)
    minus kl_coef times the mean exact KL(pi_theta || pi_ref) over prompts,
    plus entropy_coef times the mean entropy.  Groups whose advantages are
    all zero (constant rewards, or G = 1) carry no learning signal and are
    dropped from the update entirely.
    """
    tau = cfg.temperature
    eps = cfg.clip_ratio
    live = [g for g in rollouts if g.advantages is not None and np.any(g.advantages != 0.0)]

    surr_sum = 0.0
    n_actions = 0
    kl_sum = 0.0
    ent_sum = 0.0
    grad_surr = np.zeros_like(theta)
    grad_kl = np.zeros_like(theta)
    grad_ent = np.zeros_like(theta)

    for g in live:
        F = g.features
        z = F @ theta / tau
        z = z - z.max()
        logp = z - np.log(np.exp(z).sum())
        p = np.exp(logp)
        pbar_f = p @ F

        ks = g.action_indices
        adv = g.advantages
        rho = np.exp(logp[ks] - g.logprobs_old)
        unclipped = rho * adv
        clipped = np.clip(rho, 1.0 - eps, 1.0 + eps) * adv
        take_unclipped = unclipped <= clipped
        surr_sum += float(np.where(take_unclipped, unclipped, clipped).sum())
        n_actions += len(ks)
        coeff = np.where(take_unclipped, adv * rho, 0.0)
        grad_surr += (coeff[:, None] * (F[ks] - pbar_f)).sum(axis=0) / tau

        zq = F @ ref_theta / tau
        zq = zq - zq.max()
        logq = zq - np.log(np.exp(zq).sum())
        delta = logp - logq
        kl = float(p @ delta)
        kl_sum += kl
        grad_kl += ((p * delta) @ F - kl * pbar_f) / tau

        entropy = -float(p @ logp)
        ent_sum += entropy
        grad_ent += -((p * logp) @ F + entropy * pbar_f) / tau

    n_groups = len(live)
    surrogate = surr_sum / n_actions if n_actions else 0.0
    kl_mean = kl_sum / n_groups if n_groups else 0.0
    ent_mean = ent_sum / n_groups if n_groups else 0.0
    value = surrogate - cfg.kl_coef * kl_mean + cfg.entropy_coef * ent_mean

    grad = np.zeros_like(theta)
    if n_actions:
        grad += grad_surr / n_actions
    if n_groups:
        grad += -cfg.kl_coef * grad_kl / n_groups + cfg.entropy_coef * grad_ent / n_groups

    all_rewards = np.concatenate([g.rewards for g in rollouts if g.rewards is not None]) \
        if any(g.rewards is not None for g in rollouts) else np.zeros(0)
    metrics = {
        "surrogate": surrogate,
        "kl": kl_mean,
        "entropy": ent_mean,
        "mean_reward": float(all_rewards.mean()) if all_rewards.size else 0.0,
        "live_groups": n_groups,
    }
    return value, grad, metrics


@dataclass
class OptimizerState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0


def grpo_step(
    theta: np.ndarray,
    ref_theta: np.ndarray,
    rollouts: list[GroupRollout],
    cfg: TrainConfig,
    opt_state: OptimizerState | None = None,
) -> tuple[np.ndarray, dict, OptimizerState | None]:
    """One ascent update with gradient-norm clipping.

    Raises NonFiniteGradient (leaving theta untouched) on NaN/Inf gradients.
    """
    _, grad, metrics = objective_and_grad(theta, ref_theta, rollouts, cfg)
    if not np.isfinite(grad).all():
        raise NonFiniteGradient("gradient contains NaN or Inf")
    norm = float(np.linalg.norm(grad))
    metrics["grad_norm"] = norm
    if cfg.grad_clip > 0 and norm > cfg.grad_clip:
        grad = grad * (cfg.grad_clip / norm)

    if cfg.optimizer == "adamw":
        beta1, beta2, adam_eps = 0.9, 0.999, 1e-8
        state = opt_state or OptimizerState(np.zeros_like(theta), np.zeros_like(theta))
        state.t += 1
        state.m = beta1 * state.m + (1 - beta1) * grad
        state.v = beta2 * state.v + (1 - beta2) * grad * grad
        m_hat = state.m / (1 - beta1 ** state.t)
        v_hat = state.v / (1 - beta2 ** state.t)
        new_theta = theta + cfg.lr * m_hat / (np.sqrt(v_hat) + adam_eps)
        new_theta = new_theta - cfg.lr * cfg.weight_decay * theta
        return new_theta, metrics, state
    if cfg.optimizer != "sgd":
        raise ValueError(f"unknown optimizer {cfg.optimizer!r}")
    return theta + cfg.lr * grad, metrics, opt_state


def greedy_accuracy(theta: np.ndarray, dataset: list[PositionSample],
                    cache: dict | None = None) -> float:
    """Fraction of samples whose argmax move is the recorded best move."""
    if not dataset:
        return 0.0
    hits = 0
    for sample in dataset:
        moves, features = _cached_moves_features(sample, cache)
        logits = features @ theta
        if moves[int(np.argmax(logits))] == sample.optimal_move:
            hits += 1
    return hits / len(dataset)


def _cached_moves_features(sample: PositionSample, cache: dict | None):
    key = (sample.puzzle_id, sample.ply_index, sample.fen)
    if cache is not None and key in cache:
        return cache[key]
    moves = legal_moves(sample.state)
    entry = (moves, features_matrix(sample.state, moves))
    if cache is not None:
        cache[key] = entry
    return entry


@dataclass
class TrainResult:
    theta: np.ndarray
    ref_theta: np.ndarray
    metrics: list[dict] = field(default_factory=list)
    halted_early: bool = False


def save_checkpoint(path: str | Path, theta: np.ndarray, ref_theta: np.ndarray,
                    step: int, rng: np.random.Generator, cfg: TrainConfig) -> None:
    payload = {
        "theta": theta.tolist(),
        "ref_theta": ref_theta.tolist(),
        "step": step,
        "rng_state": rng.bit_generator.state,
        "config": asdict(cfg),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True))


def load_checkpoint(path: str | Path) -> dict:
    payload = json.loads(Path(path).read_text())
    payload["theta"] = np.asarray(payload["theta"])
    payload["ref_theta"] = np.asarray(payload["ref_theta"])
    return payload


def train(
    dataset: list[PositionSample],
    preset: str | tuple[RewardWeights, str] = "sparse",
    backend=None,
    cfg: TrainConfig | None = None,
    *,
    metrics_path: str | Path | None = None,
    checkpoint_path: str | Path | None = None,
    resume_from: str | Path | None = None,
    eval_dataset: list[PositionSample] | None = None,
    initial_theta: np.ndarray | None = None,
) -> TrainResult:
    """Seeded, resumable rollout -> score -> advantage -> update loop.

    The toy policy emits bare moves, so format/language components are the
    constant 1 inside the total (they shift group rewards uniformly and
    cancel in the advantages).  Halts cleanly after 3 consecutive non-finite
    gradients.
    """
    cfg = cfg or TrainConfig()
    weights, dense_mode = resolve_preset(preset) if isinstance(preset, str) else preset
    if not dataset:
        raise ValueError("empty training dataset")

    if resume_from is not None:
        state = load_checkpoint(resume_from)
        theta, ref_theta = state["theta"].copy(), state["ref_theta"].copy()
        start_step = state["step"]
        rng = np.random.default_rng()
        rng.bit_generator.state = state["rng_state"]
    else:
        rng = np.random.default_rng(cfg.seed)
        if initial_theta is not None:
            theta = np.asarray(initial_theta, dtype=float).copy()
        elif cfg.init_scale > 0.0:
            theta = cfg.init_scale * rng.normal(size=FEATURE_DIM)
        else:
            theta = np.zeros(FEATURE_DIM)
        ref_theta = theta.copy()
        start_step = 0

    cache: dict = {}
    order = rng.permutation(len(dataset))
    cursor = 0
    result = TrainResult(theta, ref_theta)
    opt_state: OptimizerState | None = None
    consecutive_bad = 0
    metrics_fh = open(metrics_path, "a", encoding="utf-8") if metrics_path else None

    try:
        for step in range(start_step, cfg.steps):
            rollouts = []
            for _ in range(cfg.batch_size):
                if cursor >= len(order):
                    order = rng.permutation(len(dataset))
                    cursor = 0
                sample = dataset[order[cursor]]
                cursor += 1
                moves, features = _cached_moves_features(sample, cache)
                rollout = sample_group(
                    theta, sample, cfg.group_size, cfg.temperature, rng,
                    features=features, moves=moves,
                )
                rollout.rewards = np.array([
                    score_move(sample, mv, weights, backend, dense_mode).total
                    for mv in rollout.actions
                ])
                rollout.advantages = compute_advantages(rollout.rewards)
                rollouts.append(rollout)

            try:
                theta, metrics, opt_state = grpo_step(theta, ref_theta, rollouts, cfg, opt_state)
                consecutive_bad = 0
            except NonFiniteGradient:
                consecutive_bad += 1
                metrics = {"surrogate": 0.0, "kl": 0.0, "entropy": 0.0,
                           "mean_reward": 0.0, "live_groups": 0, "grad_norm": float("nan"),
                           "non_finite": True}
                if consecutive_bad >= 3:
                    result.halted_early = True

            record = {"step": step, **metrics}
            if cfg.eval_every and (step + 1) % cfg.eval_every == 0:
                record["eval_accuracy"] = greedy_accuracy(
                    theta, eval_dataset if eval_dataset is not None else dataset, cache)
            result.metrics.append(record)
            if metrics_fh:
                metrics_fh.write(json.dumps(record, sort_keys=True) + "\n")
            if result.halted_early:
                break
            if checkpoint_path:
                save_checkpoint(checkpoint_path, theta, ref_theta, step + 1, rng, cfg)
    finally:
        if metrics_fh:
            metrics_fh.close()

    result.theta = theta
    result.ref_theta = ref_theta
    return result
