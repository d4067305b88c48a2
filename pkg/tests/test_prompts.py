"""Prompt rendering, output parsing, and move extraction."""

import pytest

from chessrl.core import apply_move, parse_fen, parse_san, start_position, to_fen
from chessrl.errors import ConfigError
from chessrl.prompts import (
    PROMPT_CONFIGS,
    ParsedOutput,
    PromptConfig,
    extract_move,
    parse_output,
    render_prompt,
)
from chessrl.puzzles import PositionSample

QUEEN_SPRAY_FEN = "6k1/1r3p2/4p1p1/3pQ2p/3r3P/8/5PP1/6K1 w - - 2 35"
MATE_FEN = "r4r1k/8/bp3nQp/p2P4/3P1q1P/P1N2N2/1P3P2/1K4R1 w - - 1 26"
NO_KNIGHT_FEN = "8/5k2/3p1q2/pp1PbQ2/1r2p3/8/PPP4n/1K3BR1 w - - 16 42"


def make_sample(fen=QUEEN_SPRAY_FEN, optimal="Qxd5", **kwargs):
    state = parse_fen(fen)
    defaults = dict(
        puzzle_id="t", ply_index=0, state=state,
        optimal_move=parse_san(state, optimal), solver_side=state.side_to_move,
        is_solver_move=True, rating=1500,
    )
    defaults.update(kwargs)
    return PositionSample(**defaults)


def test_golden_prompt_byte_exact(fixtures_dir):
    golden = (fixtures_dir / "golden_prompt_default.txt").read_text()
    assert render_prompt(make_sample()) == golden


def test_prompt_contains_all_legal_moves():
    text = render_prompt(make_sample())
    for san in ["Qh8+", "Qb8+", "Qg7+", "Qxd5", "Kf1", "g4", "f4"]:
        assert san in text
    assert text.endswith("Assistant: Let me solve this step by step.\n<think>")


def test_prompt_without_legal_moves():
    text = render_prompt(make_sample(), PROMPT_CONFIGS["no-legal"])
    assert "legal moves are" not in text
    assert "The current FEN string is " + QUEEN_SPRAY_FEN in text


def test_prompt_deterministic():
    sample = make_sample()
    assert render_prompt(sample) == render_prompt(sample)


def test_uci_prompt_lists_uci():
    text = render_prompt(make_sample(), PROMPT_CONFIGS["uci"])
    assert "e5d5" in text  # Qxd5 in UCI
    assert "Qxd5" not in text
    assert "UCI notation" in text


def test_pgn_prompt_requires_history():
    with pytest.raises(ConfigError):
        render_prompt(make_sample(), PROMPT_CONFIGS["pgn"])


def test_pgn_prompt_renders_movetext():
    start = start_position()
    e4 = parse_san(start, "e4")
    after = apply_move(start, e4)
    sample = make_sample(
        fen=to_fen(after), optimal="c5",
        initial_fen=to_fen(start), history_san=("e4",),
    )
    text = render_prompt(sample, PROMPT_CONFIGS["pgn"])
    assert "The move history in PGN is 1. e4" in text
    assert "continuing from" not in text  # standard-game start needs no note
    both = render_prompt(sample, PROMPT_CONFIGS["fen-pgn"])
    assert "FEN string" in both and "move history in PGN" in both


def test_pgn_prompt_notes_nonstandard_start():
    before = parse_fen("7k/1r3p2/4p1p1/3pQ2p/3r3P/8/5PP1/6K1 b - - 1 34")
    mv = parse_san(before, "Kg8")
    assert to_fen(apply_move(before, mv)) == QUEEN_SPRAY_FEN
    sample = make_sample(
        fen=QUEEN_SPRAY_FEN, optimal="Qxd5",
        initial_fen=to_fen(before), history_san=("Kg8",),
    )
    text = render_prompt(sample, PROMPT_CONFIGS["pgn"])
    assert "continuing from the position" in text


def test_bad_config_rejected():
    with pytest.raises(ConfigError):
        PromptConfig(move_notation="algebraic")
    with pytest.raises(ConfigError):
        PromptConfig(board_repr="ascii")
    with pytest.raises(ConfigError):
        render_prompt(make_sample(), PromptConfig(template_id="missing"))


# --- parse_output ---


def test_parse_wellformed():
    out = parse_output("<think>x</think> <answer>Qxd5</answer>")
    assert out.format_ok and out.english_ok
    assert out.think_text == "x"
    assert out.answer_text == "Qxd5"


def test_parse_primed_think_without_opening_tag():
    out = parse_output("the rook is loose</think> <answer>Qxd5</answer><|endoftext|>")
    assert out.format_ok
    assert out.think_text == "the rook is loose"
    assert out.answer_text == "Qxd5"


def test_parse_bare_answer_not_ok():
    out = parse_output("Qxd5")
    assert not out.format_ok
    assert not out.english_ok


def test_parse_trailing_prose_not_ok():
    out = parse_output("<think>a</think><answer>e4</answer> and furthermore")
    assert not out.format_ok


def test_parse_double_blocks_not_ok():
    assert not parse_output("<think>a</think><think>b</think><answer>e4</answer>").format_ok
    assert not parse_output("<think>a</think><answer>e4</answer><answer>d4</answer>").format_ok
    assert not parse_output("<answer>e4</answer><think>a</think>").format_ok


def test_parse_inter_block_prose_allowed():
    out = parse_output("thoughts</think>\nsummary text <answer> Nxe3 </answer>")
    assert out.format_ok
    assert out.answer_text == "Nxe3"


def test_parse_eot_variants():
    for marker in ("<|endoftext|>", "<|end_of_text|>", "</s>"):
        assert parse_output(f"<think>a</think><answer>e4</answer>{marker}").format_ok


def test_parse_non_english():
    out = parse_output("<think>анализ</think><answer>дебют</answer>")
    assert out.format_ok
    assert not out.english_ok
    cjk = parse_output("<think>考虑这个位置</think><answer>e4</answer>")
    assert not cjk.english_ok


def test_parse_mostly_ascii_ok():
    out = parse_output("<think>the pawn takes — a clear win</think><answer>e4</answer>")
    assert out.english_ok


def test_parse_empty():
    out = parse_output("")
    assert not out.format_ok
    assert out.answer_text == ""


def test_roundtrip_identity_on_answer():
    for answer in ("Qxd5", "O-O-O", "e8=Q+"):
        emitted = f"<think>reasoning</think> <answer>{answer}</answer>"
        assert parse_output(emitted).answer_text == answer


# --- extract_move ---


def test_extract_mating_move():
    pos = parse_fen(MATE_FEN)
    parsed = parse_output("<think>mate</think><answer>Qg7#</answer>")
    mv = extract_move(parsed, pos)
    assert mv is not None and mv.uci == "g6g7"


def test_extract_salvages_first_token():
    pos = parse_fen(NO_KNIGHT_FEN)
    parsed = parse_output("<think>x</think><answer>Nxg2 is great which I reduce</answer>")
    assert extract_move(parsed, pos) is None  # Nxg2 is not legal for white here
    pos2 = parse_fen(QUEEN_SPRAY_FEN)
    parsed2 = parse_output("<think>x</think><answer>Qxd5 wins the rook</answer>")
    mv = extract_move(parsed2, pos2)
    assert mv is not None and mv.san == "Qxd5"


def test_extract_strips_move_numbers_and_punct():
    pos = parse_fen(QUEEN_SPRAY_FEN)
    for answer in ("35.Qxd5", "35...Qxd5", "(Qxd5)", "Qxd5!", "35... Qxd5"):
        parsed = ParsedOutput("", answer, True, True)
        mv = extract_move(parsed, pos)
        assert mv is not None and mv.san == "Qxd5", answer


def test_extract_empty_and_garbage():
    pos = parse_fen(QUEEN_SPRAY_FEN)
    assert extract_move(ParsedOutput("", "", True, True), pos) is None
    assert extract_move(ParsedOutput("", "blunder", True, True), pos) is None
    assert extract_move(ParsedOutput("", "...", True, True), pos) is None


def test_extract_respects_notation_config():
    pos = parse_fen(QUEEN_SPRAY_FEN)
    uci_cfg = PROMPT_CONFIGS["uci"]
    assert extract_move(ParsedOutput("", "e5d5", True, True), pos, uci_cfg).san == "Qxd5"
    assert extract_move(ParsedOutput("", "Qxd5", True, True), pos, uci_cfg) is None


def test_extract_never_returns_illegal():
    pos = parse_fen(QUEEN_SPRAY_FEN)
    from chessrl.core import legal_moves

    legal = set(m.key() for m in legal_moves(pos))
    for text in ("Qxd5", "e4", "Ke2", "Qh8", "O-O", "h4h5", "Rb7"):
        mv = extract_move(ParsedOutput("", text, True, True), pos)
        assert mv is None or mv.key() in legal
