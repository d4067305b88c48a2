"""Independent reference rules engine used only as a test oracle.

Written from scratch in a deliberately different style from the package
under test: board is a dict keyed by (file, rank) holding piece letters,
legality is brute-force make-then-king-capture filtering, SAN is emitted by
its own writer.  Slow and simple on purpose; shares no code with chessrl.
"""

from __future__ import annotations

import copy

WHITE_PIECES = "PNBRQK"
BLACK_PIECES = "pnbrqk"

KNIGHT_JUMPS = [(1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2)]
KING_STEPS = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)]
ROOK_DIRS = [(0, 1), (0, -1), (1, 0), (-1, 0)]
BISHOP_DIRS = [(1, 1), (1, -1), (-1, 1), (-1, -1)]


class OracleBoard:
    def __init__(self, fen):
        placement, stm, castling, ep, half, full = fen.split()
        self.pieces = {}
        for r_idx, row in enumerate(placement.split("/")):
            rank = 7 - r_idx
            file = 0
            for ch in row:
                if ch.isdigit():
                    file += int(ch)
                else:
                    self.pieces[(file, rank)] = ch
                    file += 1
        self.white_to_move = stm == "w"
        self.castling = set(castling) - {"-"}
        self.ep = None
        if ep != "-":
            self.ep = ("abcdefgh".index(ep[0]), int(ep[1]) - 1)
        self.halfmove = int(half)
        self.fullmove = int(full)

    def fen(self):
        rows = []
        for rank in range(7, -1, -1):
            row = ""
            empty = 0
            for file in range(8):
                piece = self.pieces.get((file, rank))
                if piece is None:
                    empty += 1
                else:
                    if empty:
                        row += str(empty)
                        empty = 0
                    row += piece
            if empty:
                row += str(empty)
            rows.append(row)
        castling = "".join(c for c in "KQkq" if c in self.castling) or "-"
        ep = "-" if self.ep is None else "abcdefgh"[self.ep[0]] + str(self.ep[1] + 1)
        return " ".join([
            "/".join(rows), "w" if self.white_to_move else "b", castling, ep,
            str(self.halfmove), str(self.fullmove),
        ])

    def own(self, white):
        return WHITE_PIECES if white else BLACK_PIECES

    def find_king(self, white):
        target = "K" if white else "k"
        for square, piece in self.pieces.items():
            if piece == target:
                return square
        raise AssertionError("king missing")

    def attacked_by(self, square, white):
        """Is `square` attacked by the side `white`?"""
        f, r = square
        pawn_dr = -1 if white else 1  # attacker sits one rank behind its strike
        for df in (-1, 1):
            if self.pieces.get((f + df, r + pawn_dr)) == ("P" if white else "p"):
                return True
        for df, dr in KNIGHT_JUMPS:
            if self.pieces.get((f + df, r + dr)) == ("N" if white else "n"):
                return True
        for df, dr in KING_STEPS:
            if self.pieces.get((f + df, r + dr)) == ("K" if white else "k"):
                return True
        for dirs, letters in ((ROOK_DIRS, "RQ"), (BISHOP_DIRS, "BQ")):
            want = letters if white else letters.lower()
            for df, dr in dirs:
                nf, nr = f + df, r + dr
                while 0 <= nf <= 7 and 0 <= nr <= 7:
                    piece = self.pieces.get((nf, nr))
                    if piece is not None:
                        if piece in want:
                            return True
                        break
                    nf += df
                    nr += dr
        return False

    def pseudo_moves(self):
        """(from, to, promo_letter_or_None, is_ep, is_castle) tuples."""
        white = self.white_to_move
        own = self.own(white)
        out = []
        for (f, r), piece in list(self.pieces.items()):
            if piece not in own:
                continue
            upper = piece.upper()
            if upper == "P":
                fwd = 1 if white else -1
                start = 1 if white else 6
                last = 7 if white else 0
                if (f, r + fwd) not in self.pieces:
                    self._pawn_emit(out, (f, r), (f, r + fwd), last)
                    if r == start and (f, r + 2 * fwd) not in self.pieces:
                        out.append(((f, r), (f, r + 2 * fwd), None, False, False))
                for df in (-1, 1):
                    tgt = (f + df, r + fwd)
                    if not (0 <= tgt[0] <= 7 and 0 <= tgt[1] <= 7):
                        continue
                    victim = self.pieces.get(tgt)
                    if victim is not None and victim not in own:
                        self._pawn_emit(out, (f, r), tgt, last)
                    elif tgt == self.ep:
                        out.append(((f, r), tgt, None, True, False))
            elif upper == "N":
                for df, dr in KNIGHT_JUMPS:
                    self._step_emit(out, (f, r), (f + df, r + dr), own)
            elif upper == "K":
                for df, dr in KING_STEPS:
                    self._step_emit(out, (f, r), (f + df, r + dr), own)
            else:
                dirs = {"R": ROOK_DIRS, "B": BISHOP_DIRS, "Q": ROOK_DIRS + BISHOP_DIRS}[upper]
                for df, dr in dirs:
                    nf, nr = f + df, r + dr
                    while 0 <= nf <= 7 and 0 <= nr <= 7:
                        victim = self.pieces.get((nf, nr))
                        if victim is None:
                            out.append(((f, r), (nf, nr), None, False, False))
                        else:
                            if victim not in own:
                                out.append(((f, r), (nf, nr), None, False, False))
                            break
                        nf += df
                        nr += dr
        self._castle_moves(out)
        return out

    def _pawn_emit(self, out, frm, tgt, last_rank):
        if tgt[1] == last_rank:
            for promo in "QRBN":
                out.append((frm, tgt, promo, False, False))
        else:
            out.append((frm, tgt, None, False, False))

    def _step_emit(self, out, frm, tgt, own):
        if not (0 <= tgt[0] <= 7 and 0 <= tgt[1] <= 7):
            return
        victim = self.pieces.get(tgt)
        if victim is None or victim not in own:
            out.append((frm, tgt, None, False, False))

    def _castle_moves(self, out):
        white = self.white_to_move
        rank = 0 if white else 7
        king = (4, rank)
        if self.pieces.get(king) != ("K" if white else "k"):
            return
        if self.attacked_by(king, not white):
            return
        short = "K" if white else "k"
        long = "Q" if white else "q"
        if short in self.castling and self.pieces.get((7, rank)) == ("R" if white else "r"):
            if all((f, rank) not in self.pieces for f in (5, 6)) and \
                    not self.attacked_by((5, rank), not white) and \
                    not self.attacked_by((6, rank), not white):
                out.append((king, (6, rank), None, False, True))
        if long in self.castling and self.pieces.get((0, rank)) == ("R" if white else "r"):
            if all((f, rank) not in self.pieces for f in (1, 2, 3)) and \
                    not self.attacked_by((3, rank), not white) and \
                    not self.attacked_by((2, rank), not white):
                out.append((king, (2, rank), None, False, True))

    def play(self, move):
        """Return a new OracleBoard with the move applied (no legality check)."""
        frm, tgt, promo, is_ep, is_castle = move
        nxt = copy.deepcopy(self)
        white = self.white_to_move
        moved = nxt.pieces.pop(frm)
        was_pawn = moved.upper() == "P"
        captured = tgt in nxt.pieces
        if is_ep:
            del nxt.pieces[(tgt[0], frm[1])]
            captured = True
        if tgt in nxt.pieces:
            del nxt.pieces[tgt]
        nxt.pieces[tgt] = (promo if white else promo.lower()) if promo else moved
        if is_castle:
            rook_from = (7, frm[1]) if tgt[0] == 6 else (0, frm[1])
            rook_to = (5, frm[1]) if tgt[0] == 6 else (3, frm[1])
            nxt.pieces[rook_to] = nxt.pieces.pop(rook_from)
        if moved.upper() == "K":
            nxt.castling -= {"K", "Q"} if white else {"k", "q"}
        for corner, flag in (((0, 0), "Q"), ((7, 0), "K"), ((0, 7), "q"), ((7, 7), "k")):
            if frm == corner or tgt == corner:
                nxt.castling.discard(flag)
        if was_pawn and abs(tgt[1] - frm[1]) == 2:
            nxt.ep = (frm[0], (frm[1] + tgt[1]) // 2)
        else:
            nxt.ep = None
        if was_pawn or captured:
            nxt.halfmove = 0
        else:
            nxt.halfmove += 1
        if not white:
            nxt.fullmove += 1
        nxt.white_to_move = not white
        return nxt

    def legal_moves(self):
        white = self.white_to_move
        result = []
        for move in self.pseudo_moves():
            nxt = self.play(move)
            if not nxt.attacked_by(nxt.find_king(white), not white):
                result.append(move)
        return result

    def in_check(self):
        return self.attacked_by(self.find_king(self.white_to_move), not self.white_to_move)

    def san(self, move):
        frm, tgt, promo, is_ep, is_castle = move
        if is_castle:
            body = "O-O" if tgt[0] == 6 else "O-O-O"
        else:
            piece = self.pieces[frm].upper()
            capture = tgt in self.pieces or is_ep
            if piece == "P":
                body = ("abcdefgh"[frm[0]] + "x" if capture else "") + \
                    "abcdefgh"[tgt[0]] + str(tgt[1] + 1)
                if promo:
                    body += "=" + promo
            else:
                rivals = [
                    m for m in self.legal_moves()
                    if m[1] == tgt and m[0] != frm and self.pieces[m[0]] == self.pieces[frm]
                ]
                hint = ""
                if rivals:
                    if all(m[0][0] != frm[0] for m in rivals):
                        hint = "abcdefgh"[frm[0]]
                    elif all(m[0][1] != frm[1] for m in rivals):
                        hint = str(frm[1] + 1)
                    else:
                        hint = "abcdefgh"[frm[0]] + str(frm[1] + 1)
                body = piece + hint + ("x" if capture else "") + \
                    "abcdefgh"[tgt[0]] + str(tgt[1] + 1)
        nxt = self.play(move)
        if nxt.in_check():
            body += "#" if not nxt.legal_moves() else "+"
        return body

    def uci(self, move):
        frm, tgt, promo, _, _ = move
        text = "abcdefgh"[frm[0]] + str(frm[1] + 1) + "abcdefgh"[tgt[0]] + str(tgt[1] + 1)
        if promo:
            text += promo.lower()
        return text

    def perft(self, depth):
        if depth == 0:
            return 1
        total = 0
        for move in self.legal_moves():
            total += self.play(move).perft(depth - 1)
        return total
