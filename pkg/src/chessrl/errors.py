"""Exception taxonomy shared across the package.

Every error raised by chessrl code derives from ChessrlError so callers can
catch the whole family; the CLI maps class names to its machine-parseable
error categories.
"""


class ChessrlError(Exception):
    """Base class for all chessrl errors."""


# --- chess core ---

class MalformedFen(ChessrlError):
    """FEN text is structurally invalid (fields, characters, rank shape)."""


class IllegalPosition(ChessrlError):
    """Placement violates position invariants (kings, pawn ranks)."""


class IllegalMove(ChessrlError):
    """Move is not legal in the given position."""


class AmbiguousSan(ChessrlError):
    """SAN text matches more than one legal move."""


class UnknownSan(ChessrlError):
    """SAN text matches no legal move."""


class UnknownUci(ChessrlError):
    """UCI text matches no legal move."""


class NoLegalMoves(ChessrlError):
    """Operation requires at least one legal move."""


# --- puzzle data ---

class CsvSchemaError(ChessrlError):
    """Puzzle CSV header does not match the expected schema."""


class ValidationError(ChessrlError):
    """A puzzle row failed validation (bad FEN or illegal solution move)."""

    def __init__(self, message: str, row: int | None = None, puzzle_id: str | None = None):
        super().__init__(message)
        self.row = row
        self.puzzle_id = puzzle_id


# --- prompting ---

class ConfigError(ChessrlError):
    """Prompt or trainer configuration is inconsistent with the input."""


# --- critic backends ---

class UnknownPosition(ChessrlError):
    """Oracle critic has no recorded answer for this position."""


class EngineSpawnError(ChessrlError):
    """External UCI engine process could not be started."""


class EngineTimeout(ChessrlError):
    """External UCI engine did not answer within the deadline."""


class ProtocolError(ChessrlError):
    """External UCI engine sent an unparseable response."""


# --- training ---

class NonFiniteGradient(ChessrlError):
    """Gradient contained NaN or Inf; the update was aborted."""


# --- evaluation ---

class AgentError(ChessrlError):
    """An agent raised while being evaluated; carries the puzzle id."""

    def __init__(self, message: str, puzzle_id: str | None = None):
        super().__init__(message)
        self.puzzle_id = puzzle_id


class UnknownTaskId(ChessrlError):
    """Transcript references a task id absent from the answer key."""
