"""Puzzle ingestion, decomposition, and the persisted sample store."""

import csv
import json

import pytest

from chessrl.core import apply_move, legal_moves, parse_fen, to_fen
from chessrl.errors import CsvSchemaError
from chessrl.puzzles import (
    LICHESS_COLUMNS,
    IngestReport,
    build_dataset,
    decompose,
    ingest_csv,
    read_samples,
    sample_to_record,
)


def _write_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(LICHESS_COLUMNS))
        writer.writeheader()
        writer.writerows(rows)


def _row(puzzle_id="p1", fen="4k3/3p4/8/4P3/8/8/8/4K3 b - - 0 30",
         moves="d7d5 e5d6", rating=1200):
    return {
        "PuzzleId": puzzle_id, "FEN": fen, "Moves": moves, "Rating": rating,
        "RatingDeviation": 100, "Popularity": 50, "NbPlays": 10,
        "Themes": "fork", "GameUrl": "", "OpeningTags": "",
    }


def test_ingest_fixture_all_valid(puzzle_csv_100):
    report = IngestReport()
    puzzles = list(ingest_csv(puzzle_csv_100, report=report))
    assert len(puzzles) == 100
    assert report.errors == []
    assert all(len(p.moves) >= 2 for p in puzzles)


def test_ingest_corrupted_move_reported(tmp_path):
    path = tmp_path / "bad.csv"
    _write_csv(path, [_row(), _row(puzzle_id="p2", moves="d7d5 e5e6zz")])
    report = IngestReport()
    puzzles = list(ingest_csv(path, report=report))
    assert [p.id for p in puzzles] == ["p1"]
    assert len(report.errors) == 1
    assert report.errors[0]["row"] == 3
    assert report.errors[0]["puzzle_id"] == "p2"


def test_ingest_bad_header(tmp_path):
    path = tmp_path / "bad_header.csv"
    path.write_text("Id,Fen,Line\nx,y,z\n")
    with pytest.raises(CsvSchemaError):
        list(ingest_csv(path))


def test_ingest_rating_filter_inclusive(tmp_path):
    path = tmp_path / "ratings.csv"
    _write_csv(path, [
        _row(puzzle_id="lo", rating=199),
        _row(puzzle_id="edge_lo", rating=200),
        _row(puzzle_id="mid", rating=1500),
        _row(puzzle_id="edge_hi", rating=2800),
        _row(puzzle_id="hi", rating=2801),
    ])
    report = IngestReport()
    got = [p.id for p in ingest_csv(path, rating_min=200, rating_max=2800, report=report)]
    assert got == ["edge_lo", "mid", "edge_hi"]
    assert report.skipped_rating == 2
    assert report.total_rows == 5


def test_decompose_counts(puzzle_csv_100):
    puzzles = list(ingest_csv(puzzle_csv_100))
    with_three = next(p for p in puzzles if p.line_length == 3)
    samples = decompose(with_three, "all_moves")
    assert len(samples) == 3
    solver = decompose(with_three, "solver_only")
    assert [s.ply_index for s in solver] == [0, 2]
    assert all(s.is_solver_move for s in solver)


def test_decompose_setup_move_never_emitted(puzzle_csv_10):
    for puzzle in ingest_csv(puzzle_csv_10):
        samples = decompose(puzzle, "all_moves")
        assert len(samples) == puzzle.line_length
        # the first sample's position is the one after the setup move
        setup_applied = samples[0].state
        assert to_fen(setup_applied) != puzzle.initial_fen


def test_decompose_trajectory_chains(puzzle_csv_100):
    for puzzle in list(ingest_csv(puzzle_csv_100))[:30]:
        samples = decompose(puzzle, "all_moves")
        for a, b in zip(samples, samples[1:]):
            assert to_fen(apply_move(a.state, a.optimal_move)) == to_fen(b.state)


def test_decompose_optimal_always_legal(puzzle_csv_100):
    for puzzle in list(ingest_csv(puzzle_csv_100))[:30]:
        for s in decompose(puzzle, "all_moves"):
            assert s.optimal_move in legal_moves(s.state)


def test_decompose_mode_partition(puzzle_csv_10):
    for puzzle in ingest_csv(puzzle_csv_10):
        all_moves = decompose(puzzle, "all_moves")
        solver = decompose(puzzle, "solver_only")
        opponents = [s for s in all_moves if not s.is_solver_move]
        assert len(all_moves) == len(solver) + len(opponents)


def test_decompose_solver_side_consistent(puzzle_csv_10):
    for puzzle in ingest_csv(puzzle_csv_10):
        for s in decompose(puzzle, "all_moves"):
            if s.is_solver_move:
                assert s.state.side_to_move == s.solver_side
            else:
                assert s.state.side_to_move != s.solver_side


def test_build_dataset_deterministic_and_additive(puzzle_csv_10, tmp_path):
    puzzles = list(ingest_csv(puzzle_csv_10))
    expected = sum(p.line_length for p in puzzles)
    out1, out2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    m1 = build_dataset(puzzles, out1, seed=7, manifest_path=tmp_path / "m1.json")
    m2 = build_dataset(puzzles, out2, seed=7)
    assert m1["samples"] == expected
    assert out1.read_bytes() == out2.read_bytes()
    assert sum(m1["rating_buckets"].values()) == m1["samples"]
    manifest = json.loads((tmp_path / "m1.json").read_text())
    assert manifest["seed"] == 7
    different = tmp_path / "c.jsonl"
    build_dataset(puzzles, different, seed=8)
    assert out1.read_bytes() != different.read_bytes()


def test_sample_store_roundtrip(puzzle_csv_10, tmp_path):
    puzzles = list(ingest_csv(puzzle_csv_10))
    path = tmp_path / "samples.jsonl"
    build_dataset(puzzles, path, seed=1, include_legal=True)
    samples = read_samples(path)
    assert len(samples) == sum(p.line_length for p in puzzles)
    for s in samples[:10]:
        assert s.optimal_move in legal_moves(s.state)
    record = json.loads(path.read_text().splitlines()[0])
    assert set(record["legal_san"]) == {m.san for m in legal_moves(parse_fen(record["fen"]))}


def test_sample_record_fields(puzzle_csv_10):
    puzzle = next(iter(ingest_csv(puzzle_csv_10)))
    record = sample_to_record(decompose(puzzle)[0])
    assert set(record) >= {
        "puzzle_id", "ply_index", "fen", "optimal_san", "optimal_uci",
        "solver_side", "is_solver_move", "rating",
    }
