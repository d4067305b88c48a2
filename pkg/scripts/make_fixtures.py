#!/usr/bin/env python3
"""Regenerate the committed test fixtures (seeded, deterministic).

Produces Lichess-schema puzzle CSVs whose solution lines are legal move
sequences: a bulk of random-walk lines plus handcrafted rows guaranteeing
castling, promotion, en-passant, and mate coverage.
"""

from __future__ import annotations

import csv
import random
import sys
from pathlib import Path

from chessrl.core import apply_move, is_checkmate, legal_moves, parse_fen, start_position, to_fen

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

THEMES = [
    "fork", "pin", "skewer", "discoveredAttack", "mate", "mateIn1", "mateIn2",
    "endgame", "middlegame", "crushing", "advantage", "hangingPiece",
]

# (initial_fen, moves) rows exercising special move types; the first move is
# always the opponent's setup move.
HANDCRAFTED = [
    # mate in 1 after the setup move (Qg7# line)
    ("r4r1k/7p/bp3nQ1/p2P4/3P1q1P/P1N2N2/1P3P2/1K4R1 b - - 0 25", ["h7h6", "g6g7"]),
    # en passant is the solving move
    ("4k3/3p4/8/4P3/8/8/8/4K3 b - - 0 30", ["d7d5", "e5d6"]),
    # promotion with check is the solving move
    ("5k2/P7/8/8/8/8/8/4K3 b - - 0 40", ["f8e8", "a7a8q"]),
    # castling is the solving move
    ("4k3/8/8/8/8/8/8/R3K2R b KQ - 0 20", ["e8d8", "e1g1"]),
    # underpromotion line, two solver plies
    ("8/8/8/8/8/2k5/1p6/R3K3 b - - 0 50", ["b2a1n", "e1f2", "c3b2"]),
]


def random_game_position(rng: random.Random, min_plies: int = 8, max_plies: int = 50):
    pos = start_position()
    for _ in range(rng.randint(min_plies, max_plies)):
        moves = legal_moves(pos)
        if not moves:
            return None
        pos = apply_move(pos, moves[rng.randrange(len(moves))])
    return pos if legal_moves(pos) else None


def random_line(rng: random.Random, pos, total_moves: int):
    """A legal move sequence of exactly total_moves plies, or None."""
    ucis = []
    cur = pos
    for _ in range(total_moves):
        moves = legal_moves(cur)
        if not moves:
            return None
        mv = moves[rng.randrange(len(moves))]
        ucis.append(mv.uci)
        cur = apply_move(cur, mv)
    return ucis


def make_rows(rng: random.Random, count: int, id_prefix: str) -> list[dict]:
    rows = []
    serial = 0

    def add_row(fen: str, ucis: list[str]) -> None:
        nonlocal serial
        serial += 1
        rows.append({
            "PuzzleId": f"{id_prefix}{serial:05d}",
            "FEN": fen,
            "Moves": " ".join(ucis),
            "Rating": rng.randint(200, 2800),
            "RatingDeviation": rng.randint(50, 500),
            "Popularity": rng.randint(-100, 100),
            "NbPlays": rng.randint(1, 100000),
            "Themes": " ".join(rng.sample(THEMES, rng.randint(1, 3))),
            "GameUrl": f"https://lichess.org/{id_prefix}{serial:05d}#0",
            "OpeningTags": "",
        })

    for fen, ucis in HANDCRAFTED[: min(len(HANDCRAFTED), count)]:
        parse_fen(fen)  # sanity
        add_row(fen, ucis)

    while len(rows) < count:
        pos = random_game_position(rng)
        if pos is None:
            continue
        # setup move + a 1..4-move line (T solver/opponent plies)
        line = random_line(rng, pos, 1 + rng.randint(1, 4))
        if line is None or len(line) < 2:
            continue
        add_row(to_fen(pos), line)
    return rows


def write_csv(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def verify(path: Path) -> None:
    from chessrl.puzzles import IngestReport, ingest_csv

    report = IngestReport()
    puzzles = list(ingest_csv(path, report=report))
    assert not report.errors, report.errors
    mates = sum(1 for p in puzzles if is_checkmate(replay_end(p)))
    print(f"  {len(puzzles)} valid puzzles, {mates} ending in mate")


def replay_end(puzzle):
    from chessrl.puzzles import validate_line

    pos = parse_fen(puzzle.initial_fen)
    for mv in validate_line(puzzle.initial_fen, puzzle.moves):
        pos = apply_move(pos, mv)
    return pos


def main() -> int:
    write_csv(FIXTURES / "puzzles_100.csv", make_rows(random.Random(20240601), 100, "fix"))
    write_csv(FIXTURES / "puzzles_10.csv", make_rows(random.Random(20240602), 10, "ten"))
    verify(FIXTURES / "puzzles_100.csv")
    verify(FIXTURES / "puzzles_10.csv")

    from chessrl.service import build_diag_corpus

    corpus_path = Path(__file__).resolve().parent.parent / "src" / "chessrl" / "data" / "diag_corpus.txt"
    corpus_path.parent.mkdir(parents=True, exist_ok=True)
    count = build_diag_corpus(FIXTURES / "puzzles_100.csv", corpus_path)
    print(f"wrote {corpus_path} ({count} FENs)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
