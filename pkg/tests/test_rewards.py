"""Reward components, presets, and weighted totals."""

import pytest

from chessrl.core import legal_moves, parse_fen, parse_san
from chessrl.critics import CriticBackend, CriticScore, HeuristicCritic, OracleCritic
from chessrl.errors import ConfigError, UnknownPosition
from chessrl.puzzles import PositionSample
from chessrl.rewards import (
    RANK,
    RewardWeights,
    WEIGHT_PRESETS,
    dense_reward,
    rank_reward,
    resolve_preset,
    score,
    score_move,
    sparse_reward,
)

MATE_FEN = "r4r1k/8/bp3nQp/p2P4/3P1q1P/P1N2N2/1P3P2/1K4R1 w - - 1 26"
QUEEN_SPRAY_FEN = "6k1/1r3p2/4p1p1/3pQ2p/3r3P/8/5PP1/6K1 w - - 2 35"
THREE_MOVE_FEN = "6k1/8/8/8/8/7r/8/K7 w - - 0 1"


def make_sample(fen, optimal_san):
    state = parse_fen(fen)
    return PositionSample(
        puzzle_id="t", ply_index=0, state=state,
        optimal_move=parse_san(state, optimal_san),
        solver_side=state.side_to_move, is_solver_move=True, rating=1000,
    )


class FixedCritic(CriticBackend):
    """Test backend with per-SAN canned values."""

    backend_id = "fixed"

    def __init__(self, values):
        self.values = values

    def score(self, pos, move):
        return CriticScore(self.values[move.san], self.backend_id, 0)


def test_sparse_reward_cases():
    sample = make_sample(MATE_FEN, "Qg7#")
    pos = sample.state
    assert sparse_reward(sample, parse_san(pos, "Qg7#")) == 1.0
    assert sparse_reward(sample, None) == 0.0
    assert sparse_reward(sample, parse_san(pos, "Qf7")) == 0.0
    # same move spelled without the suffix still matches
    assert sparse_reward(sample, parse_san(pos, "Qg7")) == 1.0


def test_dense_reward_cases():
    sample = make_sample(MATE_FEN, "Qg7#")
    oracle = OracleCritic({MATE_FEN: "Qg7#"})
    assert dense_reward(sample, sample.optimal_move, oracle) == 1.0
    assert dense_reward(sample, None, oracle) == 0.0
    heuristic = HeuristicCritic(0)
    for mv in legal_moves(sample.state)[:5]:
        assert 0.0 <= dense_reward(sample, mv, heuristic) <= 1.0


def test_dense_reward_illegal_move_floor():
    sample = make_sample(MATE_FEN, "Qg7#")
    foreign = parse_san(parse_fen(THREE_MOVE_FEN), "Kb1")
    assert dense_reward(sample, foreign, HeuristicCritic(0)) == 0.0


def test_rank_reward_three_moves_exact():
    sample = make_sample(THREE_MOVE_FEN, "Ka2")
    pos = sample.state
    moves = legal_moves(pos)
    assert [m.san for m in moves] == ["Ka2", "Kb1", "Kb2"]
    critic = FixedCritic({"Ka2": 0.9, "Kb1": 0.5, "Kb2": 0.1})
    assert rank_reward(sample, parse_san(pos, "Ka2"), critic) == 1.0
    assert rank_reward(sample, parse_san(pos, "Kb1"), critic) == 0.5
    assert rank_reward(sample, parse_san(pos, "Kb2"), critic) == 0.0
    # literal (inverted) orientation pays 0 for the best move
    assert rank_reward(sample, parse_san(pos, "Ka2"), critic, literal=True) == 0.0
    assert rank_reward(sample, parse_san(pos, "Kb2"), critic, literal=True) == 1.0
    assert rank_reward(sample, None, critic) == 0.0


def test_rank_reward_extremes_on_wide_position():
    sample = make_sample(QUEEN_SPRAY_FEN, "Qxd5")
    pos = sample.state
    moves = legal_moves(pos)
    oracle = OracleCritic({QUEEN_SPRAY_FEN: "Qxd5"})
    assert rank_reward(sample, sample.optimal_move, oracle) == 1.0
    worst = moves[-1] if moves[-1] != sample.optimal_move else moves[-2]
    assert rank_reward(sample, worst, oracle) == 0.0


def test_rank_reward_single_move_position():
    fen = "7k/8/8/8/8/8/7r/K7 w - - 0 1"  # only Kb1 escapes the rank-2 rook
    state = parse_fen(fen)
    only = legal_moves(state)
    assert len(only) == 1
    sample = PositionSample("t", 0, state, only[0], "w", True, 1000)
    critic = FixedCritic({only[0].san: 0.3})
    assert rank_reward(sample, only[0], critic) == 1.0
    assert rank_reward(sample, only[0], critic, literal=True) == 0.0


def test_rank_reward_monotone_in_rank():
    sample = make_sample(QUEEN_SPRAY_FEN, "Qxd5")
    moves = legal_moves(sample.state)
    critic = HeuristicCritic(0)
    scores = critic.score_all(sample.state)
    distinct = len(set(s.value for s in scores.values()))
    ordered = sorted(moves, key=lambda m: -scores[m].value)
    rewards = [rank_reward(sample, m, critic) for m in ordered]
    assert rewards == sorted(rewards, reverse=True)
    if distinct == len(moves):  # strictly decreasing without ties
        assert len(set(rewards)) == len(rewards)


def test_rank_and_dense_argmax_agree():
    sample = make_sample(THREE_MOVE_FEN, "Ka2")
    critic = FixedCritic({"Ka2": 0.2, "Kb1": 0.8, "Kb2": 0.5})
    moves = legal_moves(sample.state)
    best_dense = max(moves, key=lambda m: dense_reward(sample, m, critic))
    best_rank = max(moves, key=lambda m: rank_reward(sample, m, critic))
    assert best_dense == best_rank == parse_san(sample.state, "Kb1")


def test_presets():
    weights, mode = resolve_preset("sparse")
    assert (weights.lambda_sparse, weights.lambda_dense) == (1.0, 0.0)
    assert weights.lambda_fmt == weights.lambda_lang == 0.1
    weights, mode = resolve_preset("dense")
    assert (weights.lambda_sparse, weights.lambda_dense) == (0.0, 1.0)
    assert resolve_preset("rank")[1] == RANK
    with pytest.raises(ConfigError):
        resolve_preset("bogus")


def test_score_sparse_preset_totals():
    sample = make_sample(MATE_FEN, "Qg7#")
    weights, mode = resolve_preset("sparse")
    out = score(sample, "<think>mate</think><answer>Qg7#</answer>", weights)
    assert (out.r_sparse, out.r_fmt, out.r_lang) == (1.0, 1.0, 1.0)
    assert out.total == 1.0 * 1.0 + 0.1 * 1.0 + 0.1 * 1.0
    assert out.extracted_move == sample.optimal_move


def test_score_malformed_dense_preset_zero_total():
    sample = make_sample(MATE_FEN, "Qg7#")
    weights, mode = resolve_preset("dense")
    oracle = OracleCritic({MATE_FEN: "Qg7#"})
    out = score(sample, "Qg7#", weights, backend=oracle, dense_mode=mode)
    assert out.total == 0.0
    assert (out.r_fmt, out.r_lang) == (0.0, 0.0)


def test_score_wrong_but_legal_dense_preset():
    sample = make_sample(MATE_FEN, "Qg7#")
    weights, mode = resolve_preset("dense")
    oracle = OracleCritic({MATE_FEN: "Qg7#"})
    out = score(sample, "<think>x</think><answer>Qf7</answer>", weights,
                backend=oracle, dense_mode=mode)
    assert out.r_dense == 0.0 and out.r_sparse == 0.0
    assert out.total == 0.1 * 1.0 + 0.1 * 1.0


def test_score_requires_backend_only_when_needed():
    sample = make_sample(MATE_FEN, "Qg7#")
    sparse_w, _ = resolve_preset("sparse")
    out = score(sample, "<think>x</think><answer>Qg7#</answer>", sparse_w)  # no backend
    assert out.r_dense == 0.0
    dense_w, _ = resolve_preset("dense")
    with pytest.raises(ConfigError):
        score(sample, "<think>x</think><answer>Qg7#</answer>", dense_w)


def test_zero_weight_component_still_computed():
    sample = make_sample(MATE_FEN, "Qg7#")
    sparse_w, _ = resolve_preset("sparse")
    oracle = OracleCritic({MATE_FEN: "Qg7#"})
    out = score(sample, "<think>x</think><answer>Qg7#</answer>", sparse_w, backend=oracle)
    assert out.r_dense == 1.0  # logged even though its weight is zero
    assert out.total == 1.0 * 1.0 + 0.0 * 1.0 + 0.1 * 1.0 + 0.1 * 1.0


def test_zero_weight_backend_errors_swallowed():
    sample = make_sample(MATE_FEN, "Qg7#")
    sparse_w, _ = resolve_preset("sparse")
    oracle = OracleCritic({"some other fen": "e4"})  # would raise UnknownPosition
    out = score(sample, "<think>x</think><answer>Qg7#</answer>", sparse_w, backend=oracle)
    assert out.r_dense == 0.0 and out.r_sparse == 1.0
    dense_w, mode = resolve_preset("dense")
    with pytest.raises(UnknownPosition):
        score(sample, "<think>x</think><answer>Qg7#</answer>", dense_w,
              backend=oracle, dense_mode=mode)


def test_sparse_one_implies_oracle_dense_one():
    sample = make_sample(QUEEN_SPRAY_FEN, "Qxd5")
    oracle = OracleCritic({QUEEN_SPRAY_FEN: "Qxd5"})
    for mv in legal_moves(sample.state):
        if sparse_reward(sample, mv) == 1.0:
            assert dense_reward(sample, mv, oracle) == 1.0


def test_score_deterministic():
    sample = make_sample(QUEEN_SPRAY_FEN, "Qxd5")
    weights, mode = resolve_preset("dense")
    critic = HeuristicCritic(1)
    text = "<think>x</think><answer>Qe4</answer>"
    a = score(sample, text, weights, backend=critic, dense_mode=mode)
    b = score(sample, text, weights, backend=critic, dense_mode=mode)
    assert a == b


def test_score_move_custom_weights():
    sample = make_sample(MATE_FEN, "Qg7#")
    weights = RewardWeights(0.5, 0.0, 0.2, 0.3)
    out = score_move(sample, sample.optimal_move, weights, fmt_ok=True, lang_ok=False)
    assert out.total == 0.5 * 1.0 + 0.0 * 0.0 + 0.2 * 1.0 + 0.3 * 0.0
