"""Action-value backends: Q(position, move) -> win probability in [0, 1].

All backends report the mover's post-move win probability (higher is better
for the side choosing the move).  Centipawn evaluations map to probability
through the Elo-style logistic 1 / (1 + 10^(-cp/400)); a forced mate in n
plies scores ±(10000 - n) centipawns.
"""

from __future__ import annotations

import queue
import shlex
import subprocess
import threading
from contextlib import contextmanager
from dataclasses import dataclass

from .core import (
    BISHOP,
    KNIGHT,
    Move,
    PAWN,
    Position,
    QUEEN,
    ROOK,
    legal_moves,
    parse_san,
    to_fen,
)
from .core.movegen import MutableBoard
from .errors import (
    ChessrlError,
    EngineSpawnError,
    EngineTimeout,
    IllegalMove,
    ProtocolError,
    UnknownPosition,
)

MATE_CP = 10_000

_MATERIAL_CP = {PAWN: 100, KNIGHT: 300, BISHOP: 300, ROOK: 500, QUEEN: 900}
_MOBILITY_CP = 1  # 0.01 pawns per pseudo-move


def win_probability(cp: float) -> float:
    """Elo-style logistic squashing of a centipawn score."""
    return 1.0 / (1.0 + 10.0 ** (-cp / 400.0))


@dataclass(frozen=True)
class CriticScore:
    value: float  # mover's post-move win probability
    backend_id: str
    depth_or_cost: int


class CriticBackend:
    """Base backend; subclasses implement score(), score_all() is derived."""

    backend_id: str = "base"

    def score(self, pos: Position, move: Move) -> CriticScore:
        raise NotImplementedError

    def score_all(self, pos: Position) -> dict[Move, CriticScore]:
        return {mv: self.score(pos, mv) for mv in legal_moves(pos)}

    def close(self) -> None:
        pass


def _check_legal(pos: Position, move: Move) -> tuple[int, int, int | None]:
    raw = (move.from_sq, move.to_sq, move.promotion)
    if raw not in MutableBoard(pos).legal_moves_raw():
        raise IllegalMove(f"{move} is not legal in {to_fen(pos)}")
    return raw


class HeuristicCritic(CriticBackend):
    """Deterministic negamax over material + mobility, to a fixed depth.

    A stand-in for a strong action-value network: weak but cheap, fully
    reproducible (no tables, no time control), and strong enough to solve
    short tactics at depth 2-4.
    """

    def __init__(self, depth: int = 2):
        if depth < 0:
            raise ValueError("depth must be >= 0")
        self.depth = depth
        self.backend_id = f"heuristic-d{depth}"

    @staticmethod
    def evaluate_cp(board: MutableBoard) -> int:
        """Static evaluation from the side to move, exactly antisymmetric."""
        material = 0
        for p in board.sq:
            if p > 0:
                material += _MATERIAL_CP.get(p, 0)
            elif p < 0:
                material -= _MATERIAL_CP.get(-p, 0)
        white_cp = material + _MOBILITY_CP * (
            board.count_mobility(True) - board.count_mobility(False)
        )
        return white_cp if board.wtm else -white_cp

    def _negamax(self, board: MutableBoard, depth: int, alpha: int, beta: int, ply: int) -> int:
        if board.halfmove >= 100:
            return 0
        moves = board.legal_moves_raw()
        if not moves:
            return -(MATE_CP - ply) if board.in_check() else 0
        if depth <= 0:
            return self.evaluate_cp(board)
        best = -(MATE_CP * 2)
        for move in moves:
            undo = board.make(move)
            value = -self._negamax(board, depth - 1, -beta, -alpha, ply + 1)
            board.unmake(undo)
            if value > best:
                best = value
            if best > alpha:
                alpha = best
            if alpha >= beta:
                break
        return best

    def score_cp(self, pos: Position, move: Move) -> int:
        raw = _check_legal(pos, move)
        board = MutableBoard(pos)
        board.make(raw)
        return -self._negamax(board, self.depth, -(MATE_CP * 2), MATE_CP * 2, 1)

    def score(self, pos: Position, move: Move) -> CriticScore:
        return CriticScore(win_probability(self.score_cp(pos, move)), self.backend_id, self.depth)


class OracleCritic(CriticBackend):
    """Answer-key backend: 1.0 for the recorded best move, 0.0 otherwise."""

    backend_id = "oracle"

    def __init__(self, answers: dict[str, str]):
        self.answers = dict(answers)

    def score(self, pos: Position, move: Move) -> CriticScore:
        _check_legal(pos, move)
        fen = to_fen(pos)
        if fen not in self.answers:
            raise UnknownPosition(f"no recorded answer for {fen}")
        stored = self.answers[fen]
        try:
            best = parse_san(pos, stored)
        except ChessrlError:
            raise UnknownPosition(f"stored answer {stored!r} is not legal in {fen}") from None
        return CriticScore(1.0 if move == best else 0.0, self.backend_id, 0)


class UciEngineCritic(CriticBackend):
    """Scores through an external engine speaking the UCI wire protocol.

    One engine process per instance; instances are not shareable across
    threads (use UciEnginePool for that).  Determinism is only as good as
    the engine's: a fixed movetime with Threads=1 is requested.
    """

    def __init__(self, engine_cmd: str | list[str], movetime_ms: int = 100,
                 timeout_s: float | None = None):
        self.movetime_ms = movetime_ms
        self.timeout_s = timeout_s if timeout_s is not None else max(5.0, movetime_ms / 1000 * 20)
        argv = shlex.split(engine_cmd) if isinstance(engine_cmd, str) else list(engine_cmd)
        self.backend_id = f"uci:{argv[0].rsplit('/', 1)[-1]}"
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, bufsize=1,
            )
        except OSError as exc:
            raise EngineSpawnError(f"cannot start engine {argv!r}: {exc}") from exc
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._send("uci")
        self._wait_for("uciok")
        self._send("setoption name Threads value 1")
        self._send("isready")
        self._wait_for("readyok")

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line.rstrip("\n"))
        self._lines.put(None)

    def _send(self, command: str) -> None:
        if self._proc.poll() is not None or self._proc.stdin is None:
            raise ProtocolError("engine process is gone")
        self._proc.stdin.write(command + "\n")
        self._proc.stdin.flush()

    def _readline(self) -> str:
        try:
            line = self._lines.get(timeout=self.timeout_s)
        except queue.Empty:
            raise EngineTimeout(f"no engine output within {self.timeout_s}s") from None
        if line is None:
            raise ProtocolError("engine closed its output stream")
        return line

    def _wait_for(self, token: str) -> None:
        while True:
            if self._readline().strip() == token:
                return

    @staticmethod
    def _parse_score(fields: list[str]) -> int | None:
        """Centipawns from the engine's stm perspective, mates folded in."""
        try:
            idx = fields.index("score")
        except ValueError:
            return None
        kind, amount = fields[idx + 1], int(fields[idx + 2])
        if kind == "cp":
            return amount
        if kind == "mate":
            if amount == 0:
                return -MATE_CP
            magnitude = MATE_CP - abs(amount)
            return magnitude if amount > 0 else -magnitude
        raise ProtocolError(f"unknown score kind {kind!r}")

    def score(self, pos: Position, move: Move) -> CriticScore:
        raw = _check_legal(pos, move)
        board = MutableBoard(pos)
        board.make(raw)
        child_fen = board.to_position().fen()
        self._send(f"position fen {child_fen}")
        self._send(f"go movetime {self.movetime_ms}")
        child_cp: int | None = None
        while True:
            line = self._readline()
            fields = line.split()
            if not fields:
                continue
            if fields[0] == "info":
                parsed = self._parse_score(fields)
                if parsed is not None:
                    child_cp = parsed
            elif fields[0] == "bestmove":
                break
        if child_cp is None:
            raise ProtocolError("engine sent bestmove without any score")
        return CriticScore(win_probability(-child_cp), self.backend_id, self.movetime_ms)

    def close(self) -> None:
        try:
            if self._proc.poll() is None:
                self._send("quit")
                self._proc.wait(timeout=2)
        except (ProtocolError, subprocess.TimeoutExpired):
            self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class UciEnginePool:
    """Bounded pool of UCI engine handles for concurrent batch scoring."""

    def __init__(self, engine_cmd: str | list[str], movetime_ms: int = 100, size: int = 2):
        self._handles: queue.Queue[UciEngineCritic] = queue.Queue()
        for _ in range(size):
            self._handles.put(UciEngineCritic(engine_cmd, movetime_ms))

    @contextmanager
    def acquire(self, timeout: float | None = None):
        try:
            handle = self._handles.get(timeout=timeout)
        except queue.Empty:
            raise EngineTimeout("engine pool exhausted") from None
        try:
            yield handle
        finally:
            self._handles.put(handle)

    def close(self) -> None:
        while not self._handles.empty():
            self._handles.get_nowait().close()
