"""SAN/UCI move notation and PGN movetext fragments.

legal_moves() is the canonical entry point: it returns Move objects carrying
both spellings, sorted lexicographically by SAN so every consumer (prompt
rendering, rank rewards, search ordering) sees one deterministic order.
"""

from __future__ import annotations

import re
from functools import lru_cache

from ..errors import AmbiguousSan, IllegalMove, UnknownSan, UnknownUci
from .board import (
    EMPTY,
    KING,
    PAWN,
    PIECE_CHARS,
    CHAR_PIECES,
    FILES,
    Move,
    Position,
    move_uci,
    square_name,
)
from .movegen import MutableBoard, RawMove, apply_raw

_SAN_RE = re.compile(
    r"^(?:(?P<castle>O-O(?:-O)?|0-0(?:-0)?)"
    r"|(?:(?P<piece>[KQRBN])?(?P<from_file>[a-h])?(?P<from_rank>[1-8])?"
    r"(?P<capture>x)?(?P<target>[a-h][1-8])(?:=?(?P<promo>[QRBN]))?))$"
)
_UCI_RE = re.compile(r"^(?P<from>[a-h][1-8])(?P<to>[a-h][1-8])(?P<promo>[qrbn])?$")
_SUFFIX_CHARS = "+#!?"


def _strip_suffixes(text: str) -> str:
    text = text.strip()
    if text.endswith("e.p.") or text.endswith("ep."):
        text = text[: text.rindex("e")].rstrip()
    return text.rstrip(_SUFFIX_CHARS)


def _san_body(board: MutableBoard, move: RawMove, raw_moves: list[RawMove]) -> str:
    """SAN without the check/mate suffix, with minimal disambiguation."""
    sq = board.sq
    f, t, promo = move
    piece = sq[f]
    kind = abs(piece)
    is_capture = sq[t] != EMPTY or (kind == PAWN and t == board.ep and (t & 7) != (f & 7))

    if kind == KING and abs(t - f) == 2:
        return "O-O" if t > f else "O-O-O"

    if kind == PAWN:
        body = ""
        if is_capture:
            body = FILES[f & 7] + "x"
        body += square_name(t)
        if promo:
            body += "=" + PIECE_CHARS[promo]
        return body

    body = PIECE_CHARS[kind]
    rivals = [
        m for m in raw_moves
        if m[1] == t and m[0] != f and sq[m[0]] == piece
    ]
    if rivals:
        same_file = any((m[0] & 7) == (f & 7) for m in rivals)
        same_rank = any((m[0] >> 3) == (f >> 3) for m in rivals)
        if not same_file:
            body += FILES[f & 7]
        elif not same_rank:
            body += str((f >> 3) + 1)
        else:
            body += square_name(f)
    if is_capture:
        body += "x"
    body += square_name(t)
    return body


@lru_cache(maxsize=8192)
def _legal_moves_cached(pos: Position) -> tuple[Move, ...]:
    board = MutableBoard(pos)
    raw = board.legal_moves_raw()
    moves = []
    for rm in raw:
        body = _san_body(board, rm, raw)
        undo = board.make(rm)
        if board.in_check():
            suffix = "#" if not board.legal_moves_raw() else "+"
        else:
            suffix = ""
        board.unmake(undo)
        f, t, promo = rm
        moves.append(Move(f, t, promo, san=body + suffix, uci=move_uci(f, t, promo)))
    moves.sort(key=lambda m: m.san)
    return tuple(moves)


def legal_moves(pos: Position) -> list[Move]:
    """All legal moves with canonical SAN and UCI, sorted by SAN ascending.

    Pure function of the position; results are memoized internally and a
    fresh list is returned on every call.
    """
    return list(_legal_moves_cached(pos))


def apply_move(pos: Position, move: Move) -> Position:
    """Successor position; raises IllegalMove when move is not legal in pos."""
    raw = (move.from_sq, move.to_sq, move.promotion)
    if raw not in MutableBoard(pos).legal_moves_raw():
        raise IllegalMove(f"{move} is not legal in {pos.fen()}")
    return apply_raw(pos, raw)


def canonical_san(pos: Position, move: Move) -> str:
    """The single canonical SAN spelling (with +/# suffix) of a legal move."""
    key = (move.from_sq, move.to_sq, move.promotion)
    for m in legal_moves(pos):
        if m.key() == key:
            return m.san
    raise IllegalMove(f"{move} is not legal in {pos.fen()}")


def parse_san(pos: Position, text: str) -> Move:
    """Resolve SAN text to the unique legal move it denotes.

    Check/mate suffixes and annotation glyphs are optional; sufficient or
    redundant disambiguation is accepted; 'x' presence is not enforced.
    """
    stripped = _strip_suffixes(text)
    if not stripped:
        raise UnknownSan(f"empty SAN text {text!r}")
    m = _SAN_RE.match(stripped)
    if m is None:
        raise UnknownSan(f"unparseable SAN {text!r}")
    moves = legal_moves(pos)

    if m.group("castle"):
        short = m.group("castle") in ("O-O", "0-0")
        wanted = "O-O" if short else "O-O-O"
        matches = [mv for mv in moves if mv.san.rstrip("+#") == wanted]
    else:
        kind = CHAR_PIECES[m.group("piece")] if m.group("piece") else PAWN
        target = FILES.index(m.group("target")[0]) + (int(m.group("target")[1]) - 1) * 8
        promo = CHAR_PIECES[m.group("promo")] if m.group("promo") else None
        from_file = FILES.index(m.group("from_file")) if m.group("from_file") else None
        from_rank = int(m.group("from_rank")) - 1 if m.group("from_rank") else None
        matches = []
        promo_wildcards = []
        for mv in moves:
            if mv.to_sq != target:
                continue
            if abs(pos.board[mv.from_sq]) != kind:
                continue
            if from_file is not None and (mv.from_sq & 7) != from_file:
                continue
            if from_rank is not None and (mv.from_sq >> 3) != from_rank:
                continue
            if mv.promotion == promo:
                matches.append(mv)
            elif promo is None and mv.promotion is not None:
                promo_wildcards.append(mv)
        if not matches and promo_wildcards:
            raise AmbiguousSan(f"{text!r} does not name a promotion piece in {pos.fen()}")

    if not matches:
        raise UnknownSan(f"no legal move matches {text!r} in {pos.fen()}")
    if len(matches) > 1:
        raise AmbiguousSan(f"{text!r} matches {[mv.san for mv in matches]} in {pos.fen()}")
    return matches[0]


def parse_uci_move(pos: Position, text: str) -> Move:
    """Resolve UCI text (e2e4, e7e8q) to the legal move it denotes."""
    m = _UCI_RE.match(text.strip())
    if m is None:
        raise UnknownUci(f"unparseable UCI {text!r}")
    for mv in legal_moves(pos):
        if mv.uci == text.strip():
            return mv
    raise UnknownUci(f"no legal move matches {text!r} in {pos.fen()}")


def uci_of(move: Move) -> str:
    return move.uci or move_uci(move.from_sq, move.to_sq, move.promotion)


# --- PGN movetext fragments (move lists only, no headers) --------------------

_MOVE_NUMBER_RE = re.compile(r"^\d+\.(\.\.)?$|^\d+\.\.\.$")
_RESULT_TOKENS = {"1-0", "0-1", "1/2-1/2", "*"}


def render_movetext(start: Position, moves: list[Move]) -> str:
    """Render a move sequence as a PGN movetext fragment ("1. e4 e5 2. ...")."""
    parts: list[str] = []
    pos = start
    for move in moves:
        san = canonical_san(pos, move)
        if pos.white_to_move:
            parts.append(f"{pos.fullmove_number}.")
        elif not parts:
            parts.append(f"{pos.fullmove_number}...")
        parts.append(san)
        pos = apply_move(pos, move)
    return " ".join(parts)


def parse_movetext(start: Position, text: str) -> list[Move]:
    """Parse a PGN movetext fragment into moves playable from `start`.

    Move numbers, result markers, and NAG glyphs are skipped; headers,
    comments and variations are out of scope.
    """
    moves: list[Move] = []
    pos = start
    for token in text.split():
        if _MOVE_NUMBER_RE.match(token) or token in _RESULT_TOKENS or token.startswith("$"):
            continue
        move = parse_san(pos, token)
        moves.append(move)
        pos = apply_move(pos, move)
    return moves
