"""Legal move generation, move application, and perft.

The public API works on immutable Position values; internally a mutable
mailbox board with make/unmake drives generation and search.  Legality uses
pin-aware filtering (no per-move make/unmake) except for en-passant
candidates, which are validated by playing them out.
"""

from __future__ import annotations

from ..errors import IllegalMove
from .board import (
    BISHOP,
    CASTLE_BK,
    CASTLE_BQ,
    CASTLE_WK,
    CASTLE_WQ,
    EMPTY,
    KING,
    KNIGHT,
    PAWN,
    QUEEN,
    ROOK,
    Position,
)

RawMove = tuple[int, int, int | None]  # (from, to, promotion kind)

_PROMOTIONS = (QUEEN, ROOK, BISHOP, KNIGHT)

# --- precomputed geometry ---------------------------------------------------

_ROOK_DIRS = ((0, 1), (0, -1), (1, 0), (-1, 0))
_BISHOP_DIRS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def _walk(sq: int, df: int, dr: int) -> list[int]:
    out = []
    f, r = sq & 7, sq >> 3
    while True:
        f += df
        r += dr
        if not (0 <= f <= 7 and 0 <= r <= 7):
            return out
        out.append(r * 8 + f)


def _jump_table(deltas: tuple[tuple[int, int], ...]) -> tuple[tuple[int, ...], ...]:
    table = []
    for sq in range(64):
        f, r = sq & 7, sq >> 3
        table.append(tuple(
            (r + dr) * 8 + (f + df)
            for df, dr in deltas
            if 0 <= f + df <= 7 and 0 <= r + dr <= 7
        ))
    return tuple(table)


KNIGHT_ATT = _jump_table(((1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2)))
KING_ATT = _jump_table(((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)))

ROOK_RAYS = tuple(tuple(tuple(_walk(sq, df, dr)) for df, dr in _ROOK_DIRS) for sq in range(64))
BISHOP_RAYS = tuple(tuple(tuple(_walk(sq, df, dr)) for df, dr in _BISHOP_DIRS) for sq in range(64))

# Squares holding a pawn of the given colour that attack the indexed square.
_PAWN_ATTACKERS_W: list[list[int]] = [[] for _ in range(64)]
_PAWN_ATTACKERS_B: list[list[int]] = [[] for _ in range(64)]
for _s in range(64):
    _f, _r = _s & 7, _s >> 3
    for _df in (-1, 1):
        if 0 <= _f + _df <= 7:
            if _r + 1 <= 7:
                _PAWN_ATTACKERS_W[(_r + 1) * 8 + _f + _df].append(_s)
            if _r - 1 >= 0:
                _PAWN_ATTACKERS_B[(_r - 1) * 8 + _f + _df].append(_s)
PAWN_ATTACKERS_W = tuple(tuple(x) for x in _PAWN_ATTACKERS_W)
PAWN_ATTACKERS_B = tuple(tuple(x) for x in _PAWN_ATTACKERS_B)


def _between_table() -> tuple[tuple[tuple[int, ...], ...], ...]:
    table = [[()] * 64 for _ in range(64)]
    for a in range(64):
        for df, dr in _ROOK_DIRS + _BISHOP_DIRS:
            ray = _walk(a, df, dr)
            for i, b in enumerate(ray):
                table[a][b] = tuple(ray[:i])
    return tuple(tuple(row) for row in table)


BETWEEN = _between_table()

# Castling-rights mask applied for any move touching the square.
CASTLE_MASK = [CASTLE_WK | CASTLE_WQ | CASTLE_BK | CASTLE_BQ] * 64
CASTLE_MASK[0] &= ~CASTLE_WQ
CASTLE_MASK[7] &= ~CASTLE_WK
CASTLE_MASK[4] &= ~(CASTLE_WK | CASTLE_WQ)
CASTLE_MASK[56] &= ~CASTLE_BQ
CASTLE_MASK[63] &= ~CASTLE_BK
CASTLE_MASK[60] &= ~(CASTLE_BK | CASTLE_BQ)
CASTLE_MASK = tuple(CASTLE_MASK)


class MutableBoard:
    """Mailbox board with make/unmake; the engine's internal workhorse."""

    __slots__ = ("sq", "wtm", "castling", "ep", "halfmove", "fullmove", "wk", "bk")

    def __init__(self, pos: Position):
        self.sq = list(pos.board)
        self.wtm = pos.white_to_move
        self.castling = pos.castling
        self.ep = pos.ep_square if pos.ep_square is not None else -1
        self.halfmove = pos.halfmove_clock
        self.fullmove = pos.fullmove_number
        self.wk = self.sq.index(KING)
        self.bk = self.sq.index(-KING)

    def to_position(self) -> Position:
        return Position(
            tuple(self.sq),
            self.wtm,
            self.castling,
            self.ep if self.ep >= 0 else None,
            self.halfmove,
            self.fullmove,
        )

    # --- attack queries ---

    def is_attacked(self, target: int, by_white: bool) -> bool:
        sq = self.sq
        if by_white:
            pawn, knight, king, rook, bishop, queen = PAWN, KNIGHT, KING, ROOK, BISHOP, QUEEN
            pawn_attackers = PAWN_ATTACKERS_W[target]
        else:
            pawn, knight, king, rook, bishop, queen = -PAWN, -KNIGHT, -KING, -ROOK, -BISHOP, -QUEEN
            pawn_attackers = PAWN_ATTACKERS_B[target]
        for s in pawn_attackers:
            if sq[s] == pawn:
                return True
        for s in KNIGHT_ATT[target]:
            if sq[s] == knight:
                return True
        for s in KING_ATT[target]:
            if sq[s] == king:
                return True
        for ray in ROOK_RAYS[target]:
            for s in ray:
                p = sq[s]
                if p != EMPTY:
                    if p == rook or p == queen:
                        return True
                    break
        for ray in BISHOP_RAYS[target]:
            for s in ray:
                p = sq[s]
                if p != EMPTY:
                    if p == bishop or p == queen:
                        return True
                    break
        return False

    def checkers(self, target: int, by_white: bool) -> list[int]:
        sq = self.sq
        out = []
        if by_white:
            pawn, knight, rook, bishop, queen = PAWN, KNIGHT, ROOK, BISHOP, QUEEN
            pawn_attackers = PAWN_ATTACKERS_W[target]
        else:
            pawn, knight, rook, bishop, queen = -PAWN, -KNIGHT, -ROOK, -BISHOP, -QUEEN
            pawn_attackers = PAWN_ATTACKERS_B[target]
        for s in pawn_attackers:
            if sq[s] == pawn:
                out.append(s)
        for s in KNIGHT_ATT[target]:
            if sq[s] == knight:
                out.append(s)
        for ray in ROOK_RAYS[target]:
            for s in ray:
                p = sq[s]
                if p != EMPTY:
                    if p == rook or p == queen:
                        out.append(s)
                    break
        for ray in BISHOP_RAYS[target]:
            for s in ray:
                p = sq[s]
                if p != EMPTY:
                    if p == bishop or p == queen:
                        out.append(s)
                    break
        return out

    def in_check(self) -> bool:
        ksq = self.wk if self.wtm else self.bk
        return self.is_attacked(ksq, not self.wtm)

    # --- legality machinery ---

    def _pins(self, ksq: int, white: bool) -> dict[int, frozenset[int]]:
        sq = self.sq
        pins: dict[int, frozenset[int]] = {}
        for rays, slider in ((ROOK_RAYS[ksq], ROOK), (BISHOP_RAYS[ksq], BISHOP)):
            for ray in rays:
                own_sq = -1
                walked: list[int] = []
                for s in ray:
                    walked.append(s)
                    p = sq[s]
                    if p == EMPTY:
                        continue
                    if (p > 0) == white:
                        if own_sq >= 0:
                            break  # two own pieces shield the king
                        own_sq = s
                    else:
                        if own_sq >= 0:
                            kind = abs(p)
                            if kind == QUEEN or kind == slider:
                                pins[own_sq] = frozenset(walked)
                        break
        return pins

    def legal_moves_raw(self) -> list[RawMove]:
        sq = self.sq
        wtm = self.wtm
        own_sign = 1 if wtm else -1
        ksq = self.wk if wtm else self.bk
        enemy_white = not wtm
        moves: list[RawMove] = []

        # King steps, with the king lifted so sliders see through its square.
        own_king = KING * own_sign
        sq[ksq] = EMPTY
        for t in KING_ATT[ksq]:
            p = sq[t]
            if p != EMPTY and (p > 0) == wtm:
                continue
            if not self.is_attacked(t, enemy_white):
                moves.append((ksq, t, None))
        sq[ksq] = own_king

        checks = self.checkers(ksq, enemy_white)
        if len(checks) >= 2:
            return moves

        allowed: frozenset[int] | None = None
        if len(checks) == 1:
            allowed = frozenset(BETWEEN[ksq][checks[0]]) | {checks[0]}
        else:
            self._gen_castling(moves, ksq, wtm)

        pins = self._pins(ksq, wtm)
        ep = self.ep

        for s in range(64):
            p = sq[s]
            if p == EMPTY or (p > 0) != wtm:
                continue
            kind = p * own_sign
            if kind == KING:
                continue
            pin_ray = pins.get(s)

            if kind == PAWN:
                self._gen_pawn(moves, s, wtm, allowed, pin_ray, ep)
                continue

            if kind == KNIGHT:
                if pin_ray is not None:
                    continue  # a pinned knight can never stay on the ray
                for t in KNIGHT_ATT[s]:
                    p2 = sq[t]
                    if p2 != EMPTY and (p2 > 0) == wtm:
                        continue
                    if allowed is not None and t not in allowed:
                        continue
                    moves.append((s, t, None))
                continue

            if kind == BISHOP:
                rays = BISHOP_RAYS[s]
            elif kind == ROOK:
                rays = ROOK_RAYS[s]
            else:
                rays = ROOK_RAYS[s] + BISHOP_RAYS[s]
            for ray in rays:
                for t in ray:
                    p2 = sq[t]
                    if p2 != EMPTY and (p2 > 0) == wtm:
                        break
                    ok = (pin_ray is None or t in pin_ray) and (allowed is None or t in allowed)
                    if ok:
                        moves.append((s, t, None))
                    if p2 != EMPTY:
                        break
        return moves

    def _gen_pawn(
        self,
        moves: list[RawMove],
        s: int,
        white: bool,
        allowed: frozenset[int] | None,
        pin_ray: frozenset[int] | None,
        ep: int,
    ) -> None:
        sq = self.sq
        file, rank = s & 7, s >> 3
        fwd = 8 if white else -8
        start_rank = 1 if white else 6
        promo_rank = 7 if white else 0

        def emit(t: int) -> None:
            if (t >> 3) == promo_rank:
                for kind in _PROMOTIONS:
                    moves.append((s, t, kind))
            else:
                moves.append((s, t, None))

        t = s + fwd
        if sq[t] == EMPTY:
            if (pin_ray is None or t in pin_ray) and (allowed is None or t in allowed):
                emit(t)
            if rank == start_rank:
                t2 = t + fwd
                if sq[t2] == EMPTY and (pin_ray is None or t2 in pin_ray) \
                        and (allowed is None or t2 in allowed):
                    moves.append((s, t2, None))
        for df in (-1, 1):
            if not 0 <= file + df <= 7:
                continue
            t = s + fwd + df
            p2 = sq[t]
            if p2 != EMPTY and (p2 > 0) != white:
                if (pin_ray is None or t in pin_ray) and (allowed is None or t in allowed):
                    emit(t)
            elif t == ep:
                # Rare and subtle (discovered checks along the cleared rank):
                # validate by playing the capture out.
                move = (s, t, None)
                undo = self.make(move)
                ksq_after = self.wk if white else self.bk
                safe = not self.is_attacked(ksq_after, not white)
                self.unmake(undo)
                if safe:
                    moves.append(move)

    def _gen_castling(self, moves: list[RawMove], ksq: int, white: bool) -> None:
        sq = self.sq
        if white:
            if ksq != 4:
                return
            if (self.castling & CASTLE_WK) and sq[5] == EMPTY and sq[6] == EMPTY \
                    and sq[7] == ROOK and not self.is_attacked(5, False) \
                    and not self.is_attacked(6, False):
                moves.append((4, 6, None))
            if (self.castling & CASTLE_WQ) and sq[3] == EMPTY and sq[2] == EMPTY \
                    and sq[1] == EMPTY and sq[0] == ROOK \
                    and not self.is_attacked(3, False) and not self.is_attacked(2, False):
                moves.append((4, 2, None))
        else:
            if ksq != 60:
                return
            if (self.castling & CASTLE_BK) and sq[61] == EMPTY and sq[62] == EMPTY \
                    and sq[63] == -ROOK and not self.is_attacked(61, True) \
                    and not self.is_attacked(62, True):
                moves.append((60, 62, None))
            if (self.castling & CASTLE_BQ) and sq[59] == EMPTY and sq[58] == EMPTY \
                    and sq[57] == EMPTY and sq[56] == -ROOK \
                    and not self.is_attacked(59, True) and not self.is_attacked(58, True):
                moves.append((60, 58, None))

    # --- make / unmake ---

    def make(self, move: RawMove) -> tuple:
        sq = self.sq
        f, t, promo = move
        piece = sq[f]
        captured = sq[t]
        white = piece > 0
        kind = piece if white else -piece

        undo = (f, t, piece, captured, self.castling, self.ep, self.halfmove)
        ep_capture_sq = -1
        rook_from = rook_to = -1

        if kind == PAWN and t == self.ep and captured == EMPTY:
            ep_capture_sq = t - 8 if white else t + 8
            sq[ep_capture_sq] = EMPTY
        elif kind == KING and abs(t - f) == 2:
            if t > f:  # short
                rook_from, rook_to = f + 3, f + 1
            else:
                rook_from, rook_to = f - 4, f - 1
            sq[rook_to] = sq[rook_from]
            sq[rook_from] = EMPTY

        sq[t] = (promo if white else -promo) if promo else piece
        sq[f] = EMPTY

        if kind == KING:
            if white:
                self.wk = t
            else:
                self.bk = t

        self.castling &= CASTLE_MASK[f] & CASTLE_MASK[t]
        if kind == PAWN and abs(t - f) == 16:
            self.ep = (f + t) // 2
        else:
            self.ep = -1
        if kind == PAWN or captured != EMPTY or ep_capture_sq >= 0:
            self.halfmove = 0
        else:
            self.halfmove += 1
        if not white:
            self.fullmove += 1
        self.wtm = not self.wtm
        return undo + (ep_capture_sq, rook_from, rook_to)

    def unmake(self, undo: tuple) -> None:
        sq = self.sq
        f, t, piece, captured, castling, ep, halfmove, ep_capture_sq, rook_from, rook_to = undo
        white = piece > 0
        sq[f] = piece
        sq[t] = captured
        if ep_capture_sq >= 0:
            sq[ep_capture_sq] = -PAWN if white else PAWN
        if rook_from >= 0:
            sq[rook_from] = sq[rook_to]
            sq[rook_to] = EMPTY
        if piece == KING:
            self.wk = f
        elif piece == -KING:
            self.bk = f
        self.castling = castling
        self.ep = ep
        self.halfmove = halfmove
        if not white:
            self.fullmove -= 1
        self.wtm = not self.wtm

    # --- search support ---

    def perft(self, depth: int) -> int:
        if depth <= 0:
            return 1
        moves = self.legal_moves_raw()
        if depth == 1:
            return len(moves)
        total = 0
        for move in moves:
            undo = self.make(move)
            total += self.perft(depth - 1)
            self.unmake(undo)
        return total

    def count_mobility(self, white: bool) -> int:
        """Pseudo-move count for one colour, a pure function of placement.

        Ignores turn, legality, castling, and en passant so the count is
        symmetric between colours; used by the static evaluation.
        """
        sq = self.sq
        total = 0
        for s in range(64):
            p = sq[s]
            if p == EMPTY or (p > 0) != white:
                continue
            kind = p if white else -p
            if kind == PAWN:
                fwd = 8 if white else -8
                if sq[s + fwd] == EMPTY:
                    total += 1
                file = s & 7
                for df in (-1, 1):
                    if 0 <= file + df <= 7:
                        p2 = sq[s + fwd + df]
                        if p2 != EMPTY and (p2 > 0) != white:
                            total += 1
            elif kind == KNIGHT:
                for t in KNIGHT_ATT[s]:
                    p2 = sq[t]
                    if p2 == EMPTY or (p2 > 0) != white:
                        total += 1
            elif kind == KING:
                for t in KING_ATT[s]:
                    p2 = sq[t]
                    if p2 == EMPTY or (p2 > 0) != white:
                        total += 1
            else:
                if kind == BISHOP:
                    rays = BISHOP_RAYS[s]
                elif kind == ROOK:
                    rays = ROOK_RAYS[s]
                else:
                    rays = ROOK_RAYS[s] + BISHOP_RAYS[s]
                for ray in rays:
                    for t in ray:
                        p2 = sq[t]
                        if p2 == EMPTY:
                            total += 1
                        else:
                            if (p2 > 0) != white:
                                total += 1
                            break
        return total


# --- Position-level helpers --------------------------------------------------


def raw_legal_moves(pos: Position) -> list[RawMove]:
    return MutableBoard(pos).legal_moves_raw()


def is_check(pos: Position) -> bool:
    """True when the side to move is in check."""
    return MutableBoard(pos).in_check()


def is_checkmate(pos: Position) -> bool:
    board = MutableBoard(pos)
    return board.in_check() and not board.legal_moves_raw()


def is_stalemate(pos: Position) -> bool:
    board = MutableBoard(pos)
    return not board.in_check() and not board.legal_moves_raw()


def apply_raw(pos: Position, move: RawMove) -> Position:
    """Apply a raw move without legality checking (caller guarantees it)."""
    board = MutableBoard(pos)
    board.make(move)
    return board.to_position()


def apply_checked(pos: Position, move: RawMove) -> Position:
    if move not in MutableBoard(pos).legal_moves_raw():
        raise IllegalMove(f"{move} is not legal in {pos.fen()}")
    return apply_raw(pos, move)


def perft(pos: Position, depth: int) -> int:
    """Count legal-game-tree leaves at exactly `depth` plies."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    return MutableBoard(pos).perft(depth)
