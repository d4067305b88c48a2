"""Board state: squares, pieces, Position, Move, and FEN round-tripping.

Squares are 0..63 with a1 = 0, b1 = 1, ..., h8 = 63 (file = sq & 7,
rank = sq >> 3).  Pieces are small signed ints: positive for white,
negative for black, magnitude in PAWN..KING.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import IllegalPosition, MalformedFen

EMPTY = 0
PAWN, KNIGHT, BISHOP, ROOK, QUEEN, KING = 1, 2, 3, 4, 5, 6

PIECE_CHARS = {PAWN: "P", KNIGHT: "N", BISHOP: "B", ROOK: "R", QUEEN: "Q", KING: "K"}
CHAR_PIECES = {c: p for p, c in PIECE_CHARS.items()}

# Castling-rights bits, FEN order K Q k q.
CASTLE_WK, CASTLE_WQ, CASTLE_BK, CASTLE_BQ = 1, 2, 4, 8
_CASTLE_FEN = ((CASTLE_WK, "K"), (CASTLE_WQ, "Q"), (CASTLE_BK, "k"), (CASTLE_BQ, "q"))

FILES = "abcdefgh"
START_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"


def square(file: int, rank: int) -> int:
    return rank * 8 + file


def square_name(sq: int) -> str:
    return FILES[sq & 7] + str((sq >> 3) + 1)


def parse_square(text: str) -> int:
    if len(text) != 2 or text[0] not in FILES or text[1] not in "12345678":
        raise MalformedFen(f"bad square {text!r}")
    return square(FILES.index(text[0]), int(text[1]) - 1)


@dataclass(frozen=True)
class Move:
    """A legal move: (from, to, promotion) plus its SAN and UCI spellings.

    Equality and hashing use only (from_sq, to_sq, promotion) so that moves
    parsed from different notations compare equal.
    """

    from_sq: int
    to_sq: int
    promotion: int | None = None
    san: str = field(default="", compare=False)
    uci: str = field(default="", compare=False)

    def key(self) -> tuple[int, int, int | None]:
        return (self.from_sq, self.to_sq, self.promotion)

    def __str__(self) -> str:
        return self.san or self.uci or f"{square_name(self.from_sq)}{square_name(self.to_sq)}"


def move_uci(from_sq: int, to_sq: int, promotion: int | None = None) -> str:
    text = square_name(from_sq) + square_name(to_sq)
    if promotion:
        text += PIECE_CHARS[promotion].lower()
    return text


@dataclass(frozen=True)
class Position:
    """Immutable full game state.

    board holds 64 signed piece codes; castling is a bitmask of CASTLE_*;
    ep_square is the skipped square after any double pawn push (recorded
    whether or not a capture is possible, matching the Lichess corpus).
    """

    board: tuple[int, ...]
    white_to_move: bool
    castling: int
    ep_square: int | None
    halfmove_clock: int
    fullmove_number: int

    @property
    def castling_rights(self) -> tuple[bool, bool, bool, bool]:
        """(K, Q, k, q) booleans in FEN order."""
        return (
            bool(self.castling & CASTLE_WK),
            bool(self.castling & CASTLE_WQ),
            bool(self.castling & CASTLE_BK),
            bool(self.castling & CASTLE_BQ),
        )

    @property
    def side_to_move(self) -> str:
        return "w" if self.white_to_move else "b"

    def piece_at(self, sq: int) -> int:
        return self.board[sq]

    def king_square(self, white: bool) -> int:
        target = KING if white else -KING
        return self.board.index(target)

    def fen(self) -> str:
        return to_fen(self)

    def __repr__(self) -> str:
        return f"Position({self.fen()!r})"


def _validate_placement(board: tuple[int, ...]) -> None:
    wk = board.count(KING)
    bk = board.count(-KING)
    if wk != 1 or bk != 1:
        raise IllegalPosition(f"need exactly one king per side, got {wk} white / {bk} black")
    for sq in range(8):
        if abs(board[sq]) == PAWN or abs(board[56 + sq]) == PAWN:
            raise IllegalPosition(f"pawn on back rank at {square_name(sq if abs(board[sq]) == PAWN else 56 + sq)}")


def parse_fen(text: str) -> Position:
    """Parse a 6-field FEN string into a Position.

    Raises MalformedFen for structural problems and IllegalPosition when the
    placement breaks position invariants (king count, pawns on back ranks).
    """
    if not isinstance(text, str):
        raise MalformedFen("FEN must be a string")
    fields = text.split()
    if len(fields) != 6:
        raise MalformedFen(f"expected 6 FEN fields, got {len(fields)}")
    placement, stm, castling, ep, halfmove, fullmove = fields

    ranks = placement.split("/")
    if len(ranks) != 8:
        raise MalformedFen(f"expected 8 ranks, got {len(ranks)}")
    board = [EMPTY] * 64
    for rank_idx, rank_text in enumerate(ranks):
        rank = 7 - rank_idx  # FEN lists rank 8 first
        file = 0
        prev_digit = False
        for ch in rank_text:
            if ch.isdigit():
                if prev_digit:
                    raise MalformedFen(f"consecutive digits in rank {rank + 1}")
                step = int(ch)
                if not 1 <= step <= 8:
                    raise MalformedFen(f"bad empty-count {ch!r}")
                file += step
                prev_digit = True
            else:
                piece = CHAR_PIECES.get(ch.upper())
                if piece is None:
                    raise MalformedFen(f"bad piece character {ch!r}")
                if file >= 8:
                    raise MalformedFen(f"rank {rank + 1} overflows 8 squares")
                board[square(file, rank)] = piece if ch.isupper() else -piece
                file += 1
                prev_digit = False
        if file != 8:
            raise MalformedFen(f"rank {rank + 1} covers {file} squares, expected 8")

    if stm not in ("w", "b"):
        raise MalformedFen(f"bad side-to-move field {stm!r}")

    castle_bits = 0
    if castling != "-":
        for ch in castling:
            for bit, sym in _CASTLE_FEN:
                if ch == sym:
                    if castle_bits & bit:
                        raise MalformedFen(f"duplicate castling flag {ch!r}")
                    castle_bits |= bit
                    break
            else:
                raise MalformedFen(f"bad castling character {ch!r}")

    ep_square: int | None = None
    if ep != "-":
        try:
            ep_square = parse_square(ep)
        except MalformedFen:
            raise MalformedFen(f"bad en-passant field {ep!r}") from None
        ep_rank = ep_square >> 3
        if ep_rank not in (2, 5):
            raise MalformedFen(f"en-passant square {ep} not on rank 3 or 6")
        if (ep_rank == 2) != (stm == "b"):
            raise MalformedFen(f"en-passant square {ep} inconsistent with side to move {stm!r}")

    try:
        halfmove_clock = int(halfmove)
        fullmove_number = int(fullmove)
    except ValueError:
        raise MalformedFen("move counters must be integers") from None
    if halfmove_clock < 0 or fullmove_number < 1:
        raise MalformedFen("move counters out of range")

    board_t = tuple(board)
    _validate_placement(board_t)
    return Position(board_t, stm == "w", castle_bits, ep_square, halfmove_clock, fullmove_number)


def to_fen(pos: Position) -> str:
    """Serialize to canonical 6-field FEN; inverse of parse_fen."""
    rows = []
    for rank in range(7, -1, -1):
        row = []
        run = 0
        for file in range(8):
            piece = pos.board[square(file, rank)]
            if piece == EMPTY:
                run += 1
                continue
            if run:
                row.append(str(run))
                run = 0
            ch = PIECE_CHARS[abs(piece)]
            row.append(ch if piece > 0 else ch.lower())
        if run:
            row.append(str(run))
        rows.append("".join(row))
    castling = "".join(sym for bit, sym in _CASTLE_FEN if pos.castling & bit) or "-"
    ep = square_name(pos.ep_square) if pos.ep_square is not None else "-"
    return " ".join((
        "/".join(rows),
        "w" if pos.white_to_move else "b",
        castling,
        ep,
        str(pos.halfmove_clock),
        str(pos.fullmove_number),
    ))


def start_position() -> Position:
    return parse_fen(START_FEN)
