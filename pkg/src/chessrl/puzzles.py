"""Lichess puzzle ingestion and trajectory decomposition.

A puzzle row carries an initial FEN and a UCI move list whose first move is
the opponent's setup move; the position the solver faces is the one after
that move.  Decomposition cuts the post-setup line into per-ply
(state, optimal move) samples.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .core import (
    Move,
    Position,
    apply_move,
    canonical_san,
    legal_moves,
    parse_fen,
    parse_uci_move,
    to_fen,
)
from .errors import ChessrlError, CsvSchemaError, ValidationError

LICHESS_COLUMNS = (
    "PuzzleId", "FEN", "Moves", "Rating", "RatingDeviation",
    "Popularity", "NbPlays", "Themes", "GameUrl", "OpeningTags",
)

RATING_BUCKET_WIDTH = 400


@dataclass(frozen=True)
class Puzzle:
    """One validated puzzle row."""

    id: str
    initial_fen: str
    moves: tuple[str, ...]  # UCI; index 0 is the opponent's setup move
    rating: int
    themes: tuple[str, ...] = ()

    @property
    def line_length(self) -> int:
        """T: number of post-setup moves."""
        return len(self.moves) - 1


@dataclass(frozen=True)
class PositionSample:
    """One (state, optimal move) pair cut from a puzzle trajectory."""

    puzzle_id: str
    ply_index: int
    state: Position
    optimal_move: Move
    solver_side: str  # "w" or "b"
    is_solver_move: bool
    rating: int
    initial_fen: str = ""
    history_san: tuple[str, ...] = ()  # moves from initial_fen up to state

    @property
    def fen(self) -> str:
        return to_fen(self.state)


@dataclass
class IngestReport:
    """Accumulates per-row failures and counts during ingest."""

    total_rows: int = 0
    accepted: int = 0
    skipped_rating: int = 0
    errors: list[dict] = field(default_factory=list)

    def add_error(self, row: int, puzzle_id: str, reason: str) -> None:
        self.errors.append({"row": row, "puzzle_id": puzzle_id, "reason": reason})


def validate_line(initial_fen: str, moves: Iterable[str]) -> list[Move]:
    """Replay a UCI move list from a FEN, returning resolved moves."""
    pos = parse_fen(initial_fen)
    resolved = []
    for i, uci in enumerate(moves):
        try:
            mv = parse_uci_move(pos, uci)
        except ChessrlError as exc:
            raise ValidationError(f"move {i} ({uci!r}): {exc}") from exc
        resolved.append(mv)
        pos = apply_move(pos, mv)
    return resolved


def ingest_csv(
    path: str | Path,
    *,
    rating_min: int | None = None,
    rating_max: int | None = None,
    report: IngestReport | None = None,
) -> Iterator[Puzzle]:
    """Stream validated puzzles from a Lichess-schema CSV.

    Invalid rows are recorded in `report` and skipped, never fatal; a header
    that does not contain the Lichess columns raises CsvSchemaError.
    Rating bounds are inclusive.
    """
    report = report if report is not None else IngestReport()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in LICHESS_COLUMNS if c not in header]
        if missing:
            raise CsvSchemaError(f"missing columns: {missing}")
        for row_no, row in enumerate(reader, start=2):  # header is line 1
            report.total_rows += 1
            puzzle_id = row.get("PuzzleId", "") or f"row{row_no}"
            try:
                rating = int(row["Rating"])
            except (TypeError, ValueError):
                report.add_error(row_no, puzzle_id, "non-integer rating")
                continue
            if (rating_min is not None and rating < rating_min) or \
                    (rating_max is not None and rating > rating_max):
                report.skipped_rating += 1
                continue
            moves = tuple((row["Moves"] or "").split())
            if len(moves) < 2:
                report.add_error(row_no, puzzle_id, "fewer than 2 moves")
                continue
            try:
                validate_line(row["FEN"], moves)
            except (ChessrlError, ValidationError) as exc:
                report.add_error(row_no, puzzle_id, str(exc))
                continue
            themes = tuple((row.get("Themes") or "").split())
            report.accepted += 1
            yield Puzzle(puzzle_id, row["FEN"], moves, rating, themes)


def decompose(puzzle: Puzzle, mode: str = "all_moves") -> list[PositionSample]:
    """Cut a puzzle trajectory into PositionSamples.

    The setup move (index 0) is always applied and never emitted as an
    answer.  In "all_moves" mode every post-setup ply becomes a sample
    (a line of T moves yields T samples); "solver_only" keeps the plies
    where the solver is to move.
    """
    if mode not in ("all_moves", "solver_only"):
        raise ValueError(f"unknown decompose mode {mode!r}")
    pos = parse_fen(puzzle.initial_fen)
    setup = parse_uci_move(pos, puzzle.moves[0])
    history = [canonical_san(pos, setup)]
    pos = apply_move(pos, setup)
    solver_side = pos.side_to_move

    samples = []
    for ply, uci in enumerate(puzzle.moves[1:]):
        mv = parse_uci_move(pos, uci)
        is_solver = ply % 2 == 0
        if mode == "all_moves" or is_solver:
            samples.append(PositionSample(
                puzzle_id=puzzle.id,
                ply_index=ply,
                state=pos,
                optimal_move=mv,
                solver_side=solver_side,
                is_solver_move=is_solver,
                rating=puzzle.rating,
                initial_fen=puzzle.initial_fen,
                history_san=tuple(history),
            ))
        history.append(canonical_san(pos, mv))
        pos = apply_move(pos, mv)
    return samples


def rating_bucket(rating: int) -> str:
    lo = (rating // RATING_BUCKET_WIDTH) * RATING_BUCKET_WIDTH
    return f"{lo}-{lo + RATING_BUCKET_WIDTH - 1}"


def sample_to_record(sample: PositionSample, include_legal: bool = False) -> dict:
    record = {
        "puzzle_id": sample.puzzle_id,
        "ply_index": sample.ply_index,
        "fen": sample.fen,
        "optimal_san": sample.optimal_move.san,
        "optimal_uci": sample.optimal_move.uci,
        "solver_side": sample.solver_side,
        "is_solver_move": sample.is_solver_move,
        "rating": sample.rating,
        "initial_fen": sample.initial_fen,
        "history_san": list(sample.history_san),
    }
    if include_legal:
        record["legal_san"] = [m.san for m in legal_moves(sample.state)]
    return record


def record_to_sample(record: dict) -> PositionSample:
    """Rebuild a sample from its stored record, re-checking move legality."""
    state = parse_fen(record["fen"])
    move = parse_uci_move(state, record["optimal_uci"])  # raises if illegal
    return PositionSample(
        puzzle_id=record["puzzle_id"],
        ply_index=int(record["ply_index"]),
        state=state,
        optimal_move=move,
        solver_side=record["solver_side"],
        is_solver_move=bool(record["is_solver_move"]),
        rating=int(record["rating"]),
        initial_fen=record.get("initial_fen", ""),
        history_san=tuple(record.get("history_san", ())),
    )


def build_dataset(
    puzzles: Iterable[Puzzle],
    out_path: str | Path,
    *,
    mode: str = "all_moves",
    seed: int = 0,
    include_legal: bool = False,
    manifest_path: str | Path | None = None,
) -> dict:
    """Decompose, shuffle (seeded), and persist samples as JSONL.

    Returns the manifest: sample/puzzle counts, per-rating-bucket counts,
    the mode, and the seed.  Identical inputs and seed produce a
    byte-identical output file.
    """
    samples: list[PositionSample] = []
    puzzle_count = 0
    for puzzle in puzzles:
        puzzle_count += 1
        samples.extend(decompose(puzzle, mode))
    random.Random(seed).shuffle(samples)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    buckets: dict[str, int] = {}
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        for sample in samples:
            buckets[rating_bucket(sample.rating)] = buckets.get(rating_bucket(sample.rating), 0) + 1
            fh.write(json.dumps(sample_to_record(sample, include_legal), sort_keys=True))
            fh.write("\n")

    manifest = {
        "samples": len(samples),
        "puzzles": puzzle_count,
        "mode": mode,
        "seed": seed,
        "rating_buckets": dict(sorted(buckets.items())),
    }
    if manifest_path is not None:
        Path(manifest_path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def read_samples(path: str | Path) -> list[PositionSample]:
    """Load a JSONL sample store, re-validating every move at read time."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(record_to_sample(json.loads(line)))
    return out
