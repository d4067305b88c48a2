"""Rules-complete chess kernel: positions, legal moves, notation, perft."""

from .board import (
    BISHOP,
    EMPTY,
    KING,
    KNIGHT,
    PAWN,
    PIECE_CHARS,
    QUEEN,
    ROOK,
    START_FEN,
    Move,
    Position,
    move_uci,
    parse_fen,
    parse_square,
    square,
    square_name,
    start_position,
    to_fen,
)
from .movegen import is_check, is_checkmate, is_stalemate, perft
from .notation import (
    apply_move,
    canonical_san,
    legal_moves,
    parse_movetext,
    parse_san,
    parse_uci_move,
    render_movetext,
    uci_of,
)

__all__ = [
    "BISHOP", "EMPTY", "KING", "KNIGHT", "PAWN", "PIECE_CHARS", "QUEEN", "ROOK",
    "START_FEN", "Move", "Position", "move_uci", "parse_fen", "parse_square",
    "square", "square_name", "start_position", "to_fen",
    "is_check", "is_checkmate", "is_stalemate", "perft",
    "apply_move", "canonical_san", "legal_moves", "parse_movetext",
    "parse_san", "parse_uci_move", "render_movetext", "uci_of",
]
