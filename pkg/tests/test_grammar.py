import json
from pathlib import Path

import pytest

from betamix import grammar
from betamix.grammar import (
    DuplicateNonterminal,
    EmptyParse,
    GrammarError,
    GrammarSyntaxError,
    LeftRecursion,
    UndefinedNonterminal,
)

TINY = """
[Move]
    ( [Hold] )
;
[Hold]
    ( jug )
    ( fine crimp )
;
"""


# --- grammar text parsing ---------------------------------------------------


def test_bundled_grammar_loads_once():
    g = grammar.load_default_grammar()
    assert g is grammar.load_default_grammar()
    assert g.start == "Move"
    assert len(g.rules) == 31
    assert len(g.rules["HoldTypeT"]) == 37
    assert {"jug", "crimp", "sloper", "pinch"} <= g.vocabulary


def test_tiny_grammar_structure():
    g = grammar.load_grammar(TINY)
    assert set(g.rules) == {"Move", "Hold"}
    assert g.rules["Hold"][1] == (grammar.TerminalSeq(("fine", "crimp")),)
    assert g.rules["Move"][0] == (grammar.NonterminalRef("Hold"),)


def test_artifact_lines_skipped_with_warning():
    with pytest.warns(UserWarning, match="artifact"):
        g = grammar.load_grammar("=20\n[Move]\n( jug )\n;\n")
    assert "Move" in g.rules


def test_duplicate_rule_rejected():
    with pytest.raises(DuplicateNonterminal):
        grammar.load_grammar("[Move]\n( jug )\n;\n[Move]\n( crimp )\n;\n")


def test_undefined_reference_rejected():
    with pytest.raises(UndefinedNonterminal) as exc:
        grammar.load_grammar("[Move]\n( [Ghost] )\n;\n")
    assert exc.value.name == "Ghost"


def test_missing_start_symbol_rejected():
    with pytest.raises(UndefinedNonterminal) as exc:
        grammar.load_grammar("[Hold]\n( jug )\n;\n")
    assert exc.value.name == "Move"


def test_direct_left_recursion_rejected():
    with pytest.raises(LeftRecursion):
        grammar.load_grammar("[Move]\n( [Move] jug )\n( jug )\n;\n")


def test_indirect_left_recursion_rejected():
    text = "[Move]\n( [Other] )\n;\n[Other]\n( [Move] x )\n;\n"
    with pytest.raises(LeftRecursion):
        grammar.load_grammar(text)


def test_tail_recursion_is_fine():
    g = grammar.load_grammar("[Move]\n( jug [Move] )\n( jug )\n;\n")
    frames = grammar.parse_move("jug jug jug", g)
    assert len(frames) == 1
    assert frames[0].consumed == (0, 1, 2)


@pytest.mark.parametrize(
    "text,line_no",
    [
        ("[Move]\n( jug )\n", 2),  # never closed
        (";\n", 1),
        ("( jug )\n", 1),
        ("[Move]\nwhat is this\n;\n", 2),
        ("[Move]\n(  )\n;\n", 2),
        ("[Move]\n( ju[g )\n;\n", 2),
        ("[Move]\n( jug )\n[Next]\n", 3),  # new rule before ';'
    ],
)
def test_syntax_errors_carry_line_numbers(text, line_no):
    with pytest.raises(GrammarSyntaxError) as exc:
        grammar.load_grammar(text)
    assert exc.value.line_no == line_no


def test_empty_grammar_rejected():
    with pytest.raises(GrammarError):
        grammar.load_grammar("\n\n")


# --- tokenization -----------------------------------------------------------


def test_tokenize_lowercases_and_strips_punctuation():
    assert grammar.tokenize('Big, JUG! "F" (ok)') == ["big", "jug", "f", "ok"]


def test_tokenize_splits_unknown_hyphenations():
    vocab = grammar.load_default_grammar().vocabulary
    assert grammar.tokenize("crimp-jug", vocab) == ["crimp", "jug"]
    assert grammar.tokenize("i-beam", vocab) == ["i", "beam"]


def test_tokenize_keeps_hyphenations_the_grammar_knows():
    vocab = grammar.load_default_grammar().vocabulary
    assert "micro-dick" in vocab
    assert grammar.tokenize("micro-dick crimp", vocab) == ["micro-dick", "crimp"]


def test_tokenize_empty():
    assert grammar.tokenize("") == []
    assert grammar.tokenize("...  !!") == []


# --- frame extraction -------------------------------------------------------


def test_single_frame_consumes_size_and_type():
    frames = grammar.parse_move("small jug")
    assert len(frames) == 1
    assert frames[0].consumed == (0, 1)
    assert frames[0].paths() == (
        "[Move].[Hold].[HoldSize].[HoldSizeSmall].[HoldSizeSmallT].small",
        "[Move].[Hold].[HoldType].[HoldTypeT].jug",
    )


def test_leading_noise_is_skipped():
    frames = grammar.parse_move("the small jug")
    assert len(frames) == 1
    assert frames[0].start == 1 and frames[0].end == 3


def test_elements_skip_ahead_over_filler():
    frames = grammar.parse_move("move to the jug")
    assert len(frames) == 1
    assert frames[0].consumed == (0, 3)


def test_frames_are_non_overlapping_left_to_right():
    frames = grammar.parse_move("jug then crimp")
    assert [f.consumed for f in frames] == [(0,), (2,)]
    assert frames[0].end <= frames[1].start


def test_unparseable_text_returns_no_frames():
    assert grammar.parse_move("walk the dog") == []
    assert grammar.parse_move("") == []


def test_longest_match_wins_over_quick_exit():
    # "fine crimp" must come out as the two-word hold, not stop after one token
    g = grammar.load_grammar(TINY)
    frames = grammar.parse_move("fine crimp", g)
    assert len(frames) == 1
    assert frames[0].consumed == (0, 1)


def test_coverage_fraction():
    assert grammar.coverage(["jug", "walk the dog"]) == 0.5
    assert grammar.coverage(["jug"]) == 1.0


def test_coverage_rejects_empty_corpus():
    with pytest.raises(GrammarError):
        grammar.coverage([])


# --- merging ----------------------------------------------------------------


def test_merge_requires_frames():
    with pytest.raises(EmptyParse):
        grammar.merge_parses([])


def test_hybrid_holds_concatenate_in_order():
    merged = grammar.merge_parses(grammar.parse_move("crimp rail"))
    assert merged.hybrid_label == "crimp-rail"
    assert [h.type_text for h in merged.holds] == ["crimp", "rail"]
    assert merged.action is None and not merged.is_match


def test_first_action_wins_but_cross_is_sticky():
    merged = grammar.merge_parses(grammar.parse_move("move to the jug and cross to the crimp"))
    assert merged.action.verb == "move"
    assert merged.action.is_cross
    assert merged.hybrid_label == "move-jug-cross-crimp"


def test_match_token_sets_the_flag():
    merged = grammar.merge_parses(grammar.parse_move("match"))
    assert merged.is_match
    assert merged.hybrid_label == "match"
    assert merged.holds == ()


def test_shape_and_size_attributes():
    merged = grammar.merge_parses(grammar.parse_move("big slopey pinch"))
    (hold,) = merged.holds
    assert hold.type_text == "pinch"
    assert hold.size == "big" and hold.shape == "bad"
    assert "slopey" in hold.descriptors


def test_subtype_recognized():
    merged = grammar.merge_parses(grammar.parse_move("crimp sidepull"))
    assert [h.subtype for h in merged.holds] == [None, "sidepull"]


def test_action_size_and_verb_class():
    merged = grammar.merge_parses(grammar.parse_move("big move to the sloper"))
    assert merged.action.size == "big"
    assert merged.action.verb_class == "small"
    dyno = grammar.merge_parses(grammar.parse_move("dyno to the jug"))
    assert dyno.action.verb_class == "big"


def test_negated_descriptor_warns():
    with pytest.warns(UserWarning, match="negated"):
        merged = grammar.merge_parses(grammar.parse_move("not big jug"))
    (hold,) = merged.holds
    assert hold.negated
    assert hold.size == "big"  # counted as the class the words reached


def test_messy_corpus_examples_match_golden():
    golden_path = Path(__file__).parent / "golden" / "messy_examples.json"
    entries = json.loads(golden_path.read_text(encoding="utf-8"))
    assert len(entries) == 7
    for entry in entries:
        frames = grammar.parse_move(entry["text"])
        assert [list(f.paths()) for f in frames] == entry["frames"], entry["text"]
        merged = grammar.merge_parses(frames)
        assert merged.hybrid_label == entry["hybrid_label"]
        assert merged.is_match == entry["is_match"]
