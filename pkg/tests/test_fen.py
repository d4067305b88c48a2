"""FEN parsing and serialization."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chessrl.core import START_FEN, parse_fen, start_position, to_fen
from chessrl.errors import IllegalPosition, MalformedFen

from conftest import random_walk


def test_start_position():
    pos = parse_fen(START_FEN)
    assert pos.white_to_move
    assert sum(1 for p in pos.board if p != 0) == 32
    assert pos.castling_rights == (True, True, True, True)
    assert pos.ep_square is None
    assert pos.fullmove_number == 1


def test_corpus_position_fields():
    pos = parse_fen("6k1/1r3p2/4p1p1/3pQ2p/3r3P/8/5PP1/6K1 w - - 2 35")
    assert pos.white_to_move
    assert pos.halfmove_clock == 2
    assert pos.fullmove_number == 35
    assert pos.castling == 0


def test_roundtrip_start():
    assert to_fen(parse_fen(START_FEN)) == START_FEN


@pytest.mark.parametrize("fen", [
    "8/8/8/8/8/8/8/8 w - - 0 1",              # no kings
    "k7/8/8/8/8/8/8/KK6 w - - 0 1",           # two white kings
    "8/8/8/8/8/8/8/K7 w - - 0 1",             # black king missing
])
def test_king_count(fen):
    with pytest.raises(IllegalPosition):
        parse_fen(fen)


def test_minimal_legal_position_accepted():
    parse_fen("k7/8/8/8/8/8/8/K6N w - - 0 1")


@pytest.mark.parametrize("fen", [
    "P3k3/8/8/8/8/8/8/4K3 w - - 0 1",   # white pawn on rank 8
    "4k3/8/8/8/8/8/8/p3K3 w - - 0 1",   # black pawn on rank 1
])
def test_pawn_back_rank(fen):
    with pytest.raises(IllegalPosition):
        parse_fen(fen)


@pytest.mark.parametrize("fen", [
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq -",        # 4 fields
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP w KQkq - 0 1",              # 7 ranks
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPZ/RNBQKBNR w KQkq - 0 1",     # bad char
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPP/RNBQKBNR w KQkq - 0 1",      # short rank
    "rnbqkbnr/pppppppp/8/8/44/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1",    # digit run
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR x KQkq - 0 1",     # bad stm
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KZkq - 0 1",     # bad castle
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq e5 0 1",    # ep rank
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR b KQkq e6 0 1",    # ep side
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - -1 1",    # neg clock
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 0",     # fullmove 0
])
def test_malformed(fen):
    with pytest.raises(MalformedFen):
        parse_fen(fen)


def test_absent_ep_serializes_dash():
    fen = to_fen(random_walk(7))
    fields = fen.split()
    assert len(fields) == 6


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_roundtrip_random_walks(seed):
    pos = random_walk(seed)
    fen = to_fen(pos)
    assert to_fen(parse_fen(fen)) == fen


def test_start_position_helper():
    assert to_fen(start_position()) == START_FEN
