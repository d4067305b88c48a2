"""Shared fixtures: deterministic random-walk positions and fixture paths."""

from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

from chessrl.core import Position, apply_move, legal_moves, start_position

FIXTURES = Path(__file__).parent / "fixtures"


def pytest_runtest_logreport(report):
    """One visible PASS/FAIL line per acceptance criterion."""
    if report.when == "call" and "acceptance" in getattr(report, "keywords", {}):
        outcome = "PASS" if report.passed else "FAIL"
        name = report.nodeid.split("::")[-1]
        print(f"[ACCEPTANCE {outcome}] {name}", file=sys.stderr)


def random_walk(seed: int, max_plies: int = 40) -> Position:
    """Play random legal moves from the start; deterministic per seed."""
    rng = random.Random(seed)
    pos = start_position()
    for _ in range(rng.randint(0, max_plies)):
        moves = legal_moves(pos)
        if not moves:
            break
        pos = apply_move(pos, moves[rng.randrange(len(moves))])
    return pos


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def puzzle_csv_100(fixtures_dir: Path) -> Path:
    return fixtures_dir / "puzzles_100.csv"


@pytest.fixture(scope="session")
def puzzle_csv_10(fixtures_dir: Path) -> Path:
    return fixtures_dir / "puzzles_10.csv"
