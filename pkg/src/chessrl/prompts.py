"""Prompt rendering and model-output parsing.

render_prompt turns a PositionSample into the canonical text prompt (board
state, optional legal-move list, rules reminder, and the primed
"<think>" opening); parse_output and extract_move take the model's raw
completion back to a graded move.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from string import Template

from .core import Move, Position, legal_moves, parse_fen, parse_san, parse_uci_move, render_movetext
from .errors import AmbiguousSan, ChessrlError, ConfigError, UnknownSan, UnknownUci
from .puzzles import PositionSample

SAN, UCI = "san", "uci"
FEN, PGN, FEN_PGN = "fen", "pgn", "fen+pgn"


@dataclass(frozen=True)
class PromptConfig:
    """Prompt-format axes: move notation, board representation, legal list."""

    move_notation: str = SAN
    board_repr: str = FEN
    include_legal_moves: bool = True
    template_id: str = "default"

    def __post_init__(self):
        if self.move_notation not in (SAN, UCI):
            raise ConfigError(f"unknown move notation {self.move_notation!r}")
        if self.board_repr not in (FEN, PGN, FEN_PGN):
            raise ConfigError(f"unknown board representation {self.board_repr!r}")


PROMPT_CONFIGS: dict[str, PromptConfig] = {
    "default": PromptConfig(),
    "no-legal": PromptConfig(include_legal_moves=False),
    "uci": PromptConfig(move_notation=UCI),
    "uci-no-legal": PromptConfig(move_notation=UCI, include_legal_moves=False),
    "pgn": PromptConfig(board_repr=PGN),
    "fen-pgn": PromptConfig(board_repr=FEN_PGN),
}

_NOTATION_TEXT = {
    SAN: ("SAN", "the moving piece and the destination square", "Nf3, Rxf2, c5"),
    UCI: ("UCI", "the origin and destination squares", "g1f3, f1f2, c4c5"),
}


def _template(template_id: str) -> Template:
    path = resources.files("chessrl").joinpath(f"templates/{template_id}.txt")
    try:
        return Template(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"unknown template id {template_id!r}") from None


def _board_clause(sample: PositionSample, cfg: PromptConfig) -> str:
    parts = []
    if cfg.board_repr in (FEN, FEN_PGN):
        parts.append(f"The current FEN string is {sample.fen}")
    if cfg.board_repr in (PGN, FEN_PGN):
        if not sample.history_san:
            raise ConfigError("PGN board representation requires a sample with move history")
        start = parse_fen(sample.initial_fen)
        history = [parse_san_sequence(start, sample.history_san)]
        movetext = render_movetext(start, history[0])
        clause = f"the move history in PGN is {movetext}" if parts else \
            f"The move history in PGN is {movetext}"
        if sample.initial_fen != start_fen_of_standard_game():
            clause += f" (continuing from the position {sample.initial_fen})"
        parts.append(clause)
    return ", ".join(parts) if len(parts) > 1 else parts[0]


def parse_san_sequence(start: Position, sans: tuple[str, ...]) -> list[Move]:
    from .core import apply_move

    pos = start
    out = []
    for san in sans:
        mv = parse_san(pos, san)
        out.append(mv)
        pos = apply_move(pos, mv)
    return out


def start_fen_of_standard_game() -> str:
    from .core import START_FEN

    return START_FEN


def render_prompt(sample: PositionSample, cfg: PromptConfig | None = None) -> str:
    """Byte-deterministic prompt for a sample under the given config."""
    cfg = cfg or PROMPT_CONFIGS["default"]
    notation_name, notation_hint, notation_examples = _NOTATION_TEXT[cfg.move_notation]

    question = _board_clause(sample, cfg)
    if cfg.include_legal_moves:
        moves = legal_moves(sample.state)
        listed = " ".join(m.san if cfg.move_notation == SAN else m.uci for m in moves)
        question += f" and legal moves are {listed}. " \
            "What is the best move to make out of the list of legal moves?"
    else:
        question += ". What is the best move to make?"

    return _template(cfg.template_id).substitute(
        notation_name=notation_name,
        notation_hint=notation_hint,
        notation_examples=notation_examples,
        user_question=question,
    )


# --- output parsing -----------------------------------------------------------

_EOT_MARKERS = ("<|endoftext|>", "<|end_of_text|>", "<|eot_id|>", "<|im_end|>", "</s>")

# Scripts whose presence marks the output as non-English.
_NON_LATIN_RANGES = (
    (0x0400, 0x052F),  # Cyrillic + supplement
    (0x0600, 0x06FF),  # Arabic
    (0x0750, 0x077F),  # Arabic supplement
    (0x1100, 0x11FF),  # Hangul jamo
    (0x3040, 0x30FF),  # Hiragana + Katakana
    (0x3400, 0x4DBF),  # CJK extension A
    (0x4E00, 0x9FFF),  # CJK unified
    (0xAC00, 0xD7AF),  # Hangul syllables
)


@dataclass(frozen=True)
class ParsedOutput:
    """Structured view of a raw model completion."""

    think_text: str
    answer_text: str
    format_ok: bool
    english_ok: bool


def _strip_eot(text: str) -> str:
    text = text.rstrip()
    changed = True
    while changed:
        changed = False
        for marker in _EOT_MARKERS:
            if text.endswith(marker):
                text = text[: -len(marker)].rstrip()
                changed = True
    return text


def _looks_english(text: str) -> bool:
    if not text:
        return True
    ascii_count = 0
    for ch in text:
        cp = ord(ch)
        if cp < 128:
            ascii_count += 1
            continue
        for lo, hi in _NON_LATIN_RANGES:
            if lo <= cp <= hi:
                return False
    return ascii_count / len(text) >= 0.95


def parse_output(raw: str) -> ParsedOutput:
    """Extract think/answer spans and grade format and language.

    The training prompt ends with an opening "<think>", so completions may
    either start mid-think (no opening tag) or restate the full block; both
    shapes are well-formed.  Trailing end-of-text markers are ignored.
    Language is only assessable on well-formed output: english_ok is False
    whenever format_ok is.
    """
    text = _strip_eot(raw or "")

    think_open = text.count("<think>")
    think_close = text.count("</think>")
    ans_open = text.count("<answer>")
    ans_close = text.count("</answer>")

    # Best-effort spans for diagnostics even when the shape is wrong.
    think_match = re.search(r"(?:<think>)?(.*?)</think>", text, re.DOTALL)
    answer_match = re.search(r"<answer>(.*?)</answer>", text, re.DOTALL)
    think_text = think_match.group(1).strip() if think_match else ""
    answer_text = answer_match.group(1).strip() if answer_match else ""

    format_ok = (
        think_close == 1 and ans_open == 1 and ans_close == 1 and think_open <= 1
        and think_match is not None and answer_match is not None
    )
    if format_ok:
        if think_open == 1:
            open_at = text.index("<think>")
            format_ok = text[:open_at].strip() == "" and open_at < text.index("</think>")
        format_ok = format_ok and text.index("</think>") < text.index("<answer>")
        format_ok = format_ok and text[text.index("</answer>") + len("</answer>"):].strip() == ""
    if not format_ok and think_match is None:
        # Unclosed think: keep whatever ran up to the answer for diagnostics.
        head = text.split("<answer>")[0]
        think_text = head.replace("<think>", "").strip()

    english_ok = format_ok and _looks_english(think_text + answer_text)
    return ParsedOutput(think_text, answer_text, format_ok, english_ok)


_MOVE_NUMBER_PREFIX = re.compile(r"^\d+\.{0,3}")
_PUNCT = ".,;:!?()[]{}\"'`"


def extract_move(parsed: ParsedOutput, pos: Position, cfg: PromptConfig | None = None) -> Move | None:
    """Resolve the answer text to a legal move, or None.

    Salvage is deliberately narrow: the first whitespace token that survives
    stripping move numbers, punctuation, and annotation glyphs is resolved
    under the configured notation; anything else fails.
    """
    cfg = cfg or PROMPT_CONFIGS["default"]
    token = ""
    for candidate in (parsed.answer_text or "").split():
        candidate = _MOVE_NUMBER_PREFIX.sub("", candidate)
        candidate = candidate.strip(_PUNCT).rstrip("±∓!?")
        if candidate:
            token = candidate
            break
    if not token:
        return None
    try:
        if cfg.move_notation == UCI:
            return parse_uci_move(pos, token)
        return parse_san(pos, token)
    except (UnknownSan, AmbiguousSan, UnknownUci, ChessrlError):
        return None
