"""Strict sequential puzzle evaluation and rule-knowledge diagnostics.

Puzzle accuracy is all-or-nothing: the agent must match every solver move of
the recorded line exactly (opponent replies are auto-played from the line,
never searched).  Per-position accuracy tallies each queried ply
independently, so it upper-bounds puzzle accuracy.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .core import Move, Position, apply_move, legal_moves, parse_fen, parse_uci_move, to_fen
from .critics import CriticBackend
from .errors import AgentError, UnknownTaskId
from .grpo import softmax_logits, features_matrix
from .prompts import PROMPT_CONFIGS, PromptConfig, extract_move, parse_output
from .puzzles import Puzzle, PositionSample, decompose, rating_bucket


class Agent(Protocol):
    """Anything that can answer a move prompt with raw output text."""

    def choose(self, pos: Position, legal: list[Move], prompt: str) -> str: ...


def _wrap(san: str, note: str = "ok") -> str:
    return f"<think>{note}</think> <answer>{san}</answer>"


class OracleAgent:
    """Answers from a fen -> SAN key; perfect on its own corpus."""

    def __init__(self, answers: dict[str, str]):
        self.answers = answers

    def choose(self, pos, legal, prompt):
        return _wrap(self.answers.get(to_fen(pos), ""))


class RandomAgent:
    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)

    def choose(self, pos, legal, prompt):
        return _wrap(self.rng.choice(legal).san)


class GreedyCriticAgent:
    """Plays the backend's argmax move (deterministic tie-break by list order)."""

    def __init__(self, backend: CriticBackend):
        self.backend = backend

    def choose(self, pos, legal, prompt):
        scores = self.backend.score_all(pos)
        best = max(legal, key=lambda m: (scores[m].value, -legal.index(m)))
        return _wrap(best.san)


class PolicyAgent:
    """Greedy argmax of a trained feature-linear policy."""

    def __init__(self, theta: np.ndarray):
        self.theta = np.asarray(theta)

    def choose(self, pos, legal, prompt):
        probs = softmax_logits(features_matrix(pos, legal), self.theta, 1.0)
        return _wrap(legal[int(np.argmax(probs))].san)


@dataclass
class EvalConfig:
    prompt_cfg: PromptConfig = field(default_factory=lambda: PROMPT_CONFIGS["default"])
    keep_failures: int = 50


@dataclass
class EvalReport:
    puzzles_total: int = 0
    puzzles_solved: int = 0
    positions_total: int = 0
    positions_correct: int = 0
    buckets: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def puzzle_accuracy(self) -> float:
        return self.puzzles_solved / self.puzzles_total if self.puzzles_total else 0.0

    @property
    def per_position_accuracy(self) -> float:
        return self.positions_correct / self.positions_total if self.positions_total else 0.0

    def to_dict(self) -> dict:
        return {
            "puzzle_accuracy": self.puzzle_accuracy,
            "per_position_accuracy": self.per_position_accuracy,
            "puzzles_total": self.puzzles_total,
            "puzzles_solved": self.puzzles_solved,
            "positions_total": self.positions_total,
            "positions_correct": self.positions_correct,
            "buckets": self.buckets,
            "failures": self.failures,
        }


def eval_puzzles(agent: Agent, puzzles: Iterable[Puzzle],
                 cfg: EvalConfig | None = None) -> EvalReport:
    """Run the exact-sequence protocol over validated puzzles."""
    cfg = cfg or EvalConfig()
    report = EvalReport()
    for puzzle in puzzles:
        report.puzzles_total += 1
        bucket = report.buckets.setdefault(rating_bucket(puzzle.rating),
                                           {"puzzles": 0, "solved": 0})
        bucket["puzzles"] += 1
        solved = True
        for sample in decompose(puzzle, "all_moves"):
            if not sample.is_solver_move:
                continue  # recorded opponent replies are auto-played via the chain
            if not solved:
                break
            legal = legal_moves(sample.state)
            prompt = render_for_eval(sample, cfg.prompt_cfg)
            try:
                raw = agent.choose(sample.state, legal, prompt)
            except Exception as exc:
                raise AgentError(f"agent failed: {exc}", puzzle_id=puzzle.id) from exc
            report.positions_total += 1
            extracted = extract_move(parse_output(raw), sample.state, cfg.prompt_cfg)
            if extracted is not None and extracted == sample.optimal_move:
                report.positions_correct += 1
            else:
                solved = False
                if len(report.failures) < cfg.keep_failures:
                    report.failures.append({
                        "puzzle_id": puzzle.id,
                        "ply_index": sample.ply_index,
                        "fen": sample.fen,
                        "expected_san": sample.optimal_move.san,
                        "got_san": extracted.san if extracted else None,
                        "raw_output": raw,
                    })
        if solved:
            report.puzzles_solved += 1
            bucket["solved"] += 1
    return report


def render_for_eval(sample: PositionSample, prompt_cfg: PromptConfig) -> str:
    from .prompts import render_prompt

    return render_prompt(sample, prompt_cfg)


# --- diagnostics ---------------------------------------------------------------


def corpus_fens(puzzles: Iterable[Puzzle]) -> list[str]:
    """Every position reached while replaying the puzzle lines, deduplicated."""
    seen: set[str] = set()
    out: list[str] = []
    for puzzle in puzzles:
        pos = parse_fen(puzzle.initial_fen)
        for uci in puzzle.moves:
            fen = to_fen(pos)
            if fen not in seen:
                seen.add(fen)
                out.append(fen)
            pos = apply_move(pos, parse_uci_move(pos, uci))
        final = to_fen(pos)
        if final not in seen:
            seen.add(final)
            out.append(final)
    return out


BOARD_STATE_PROMPT = (
    "Given the chess position with FEN {start_fen}, apply the following moves "
    "in order: {moves}. Reply with the resulting FEN string inside "
    "<answer> </answer> tags."
)

TWO_CANDIDATE_PROMPT = (
    "The current FEN string is {fen}. Which move is better, (a) {move_a} or "
    "(b) {move_b}? Reply with the letter or the move inside <answer> </answer> tags."
)


def gen_board_state_task(rng: random.Random, k: int, fens: list[str],
                         task_id: str = "bs0") -> dict:
    """One state-tracking item: start FEN, k random SAN moves, expected FEN."""
    if not 1 <= k <= 5:
        raise ValueError("k must be in 1..5")
    for _ in range(256):
        pos = parse_fen(rng.choice(fens))
        start_fen = to_fen(pos)
        sans: list[str] = []
        ok = True
        for _ in range(k):
            moves = legal_moves(pos)
            if not moves:
                ok = False
                break
            mv = moves[rng.randrange(len(moves))]
            sans.append(mv.san)
            pos = apply_move(pos, mv)
        if ok:
            return {
                "task_id": task_id,
                "kind": "board_state",
                "start_fen": start_fen,
                "san_moves": sans,
                "expected_fen": to_fen(pos),
                "prompt": BOARD_STATE_PROMPT.format(start_fen=start_fen, moves=" ".join(sans)),
            }
    raise ValueError("corpus positions run out of legal moves before k plies")


def gen_two_candidate_task(rng: random.Random, backend: CriticBackend, fens: list[str],
                           margin: float = 0.2, task_id: str = "tc0") -> dict | None:
    """One better-move item, or None when no sampled position clears the margin."""
    for _ in range(64):
        pos = parse_fen(rng.choice(fens))
        moves = legal_moves(pos)
        if len(moves) < 2:
            continue
        scores = backend.score_all(pos)
        ordered = sorted(moves, key=lambda m: -scores[m].value)
        best = ordered[0]
        weaker = [m for m in ordered[1:] if scores[best].value - scores[m].value >= margin]
        if not weaker:
            continue
        other = weaker[rng.randrange(len(weaker))]
        better_is_a = rng.random() < 0.5
        move_a, move_b = (best, other) if better_is_a else (other, best)
        return {
            "task_id": task_id,
            "kind": "two_candidate",
            "fen": to_fen(pos),
            "move_a": move_a.san,
            "move_b": move_b.san,
            "better": "a" if better_is_a else "b",
            "value_gap": scores[best].value - scores[other].value,
            "prompt": TWO_CANDIDATE_PROMPT.format(fen=to_fen(pos), move_a=move_a.san,
                                                  move_b=move_b.san),
        }
    return None


def gen_tasks(kind: str, count: int, seed: int, fens: list[str], *,
              k: int = 3, backend: CriticBackend | None = None,
              margin: float = 0.2) -> list[dict]:
    rng = random.Random(seed)
    tasks = []
    for i in range(count):
        if kind == "board_state":
            tasks.append(gen_board_state_task(rng, k, fens, task_id=f"bs{i:05d}"))
        elif kind == "two_candidate":
            if backend is None:
                raise ValueError("two_candidate generation needs a critic backend")
            task = gen_two_candidate_task(rng, backend, fens, margin, task_id=f"tc{i:05d}")
            if task is not None:
                tasks.append(task)
        else:
            raise ValueError(f"unknown task kind {kind!r}")
    return tasks


def _normalize_fen_text(text: str) -> str:
    return " ".join(text.split())


def _candidate_answer(raw: str) -> str:
    parsed = parse_output(raw)
    if parsed.answer_text:
        return parsed.answer_text.strip()
    return raw.strip()


def grade_board_state(raw: str, task: dict) -> bool:
    return _normalize_fen_text(_candidate_answer(raw)) == _normalize_fen_text(task["expected_fen"])


def grade_two_candidate(raw: str, task: dict) -> bool:
    answer = _candidate_answer(raw).strip().strip("()").rstrip(".").strip()
    better_letter = task["better"]
    better_move = task["move_a"] if better_letter == "a" else task["move_b"]
    if answer.lower() == better_letter:
        return True
    return answer.rstrip("+#") == better_move.rstrip("+#")


def grade_transcripts(transcripts_path: str | Path, tasks_path: str | Path) -> dict:
    """Offline grading of {task_id, raw_output} lines against stored tasks."""
    tasks: dict[str, dict] = {}
    with open(tasks_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                task = json.loads(line)
                tasks[task["task_id"]] = task
    total = correct = 0
    by_kind: dict[str, dict] = {}
    with open(transcripts_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            entry = json.loads(line)
            task = tasks.get(entry["task_id"])
            if task is None:
                raise UnknownTaskId(f"transcript references unknown task {entry['task_id']!r}")
            if task["kind"] == "board_state":
                ok = grade_board_state(entry["raw_output"], task)
            else:
                ok = grade_two_candidate(entry["raw_output"], task)
            stats = by_kind.setdefault(task["kind"], {"total": 0, "correct": 0})
            stats["total"] += 1
            stats["correct"] += ok
            total += 1
            correct += ok
    for stats in by_kind.values():
        stats["accuracy"] = stats["correct"] / stats["total"] if stats["total"] else 0.0
    return {
        "total": total,
        "correct": correct,
        "accuracy": correct / total if total else 0.0,
        "by_kind": by_kind,
    }
