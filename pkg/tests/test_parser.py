from __future__ import annotations

import itertools
import random

import pytest

from magfuse import (
    AttributeEvaluationError,
    CoopType,
    EmptyInputError,
    Lit,
    ModLit,
    Modality,
    MultimodalGrammar,
    MultimodalToken,
    NoParseError,
    NotParseable,
    ParseTree,
    Production,
    Ref,
    SemanticFunction,
    SynRole,
    binarize,
    evaluate_attributes,
    extract_trees,
    make_terminal,
    match_terminal,
    parse,
    recognize,
)

from .conftest import gesture, random_grammar, sentence_of, speech
from .oracles import grammar_strings


# --- match_terminal -----------------------------------------------------------------

def test_song_by_speech_matches(seed):
    found = match_terminal(speech("song", 0, 10), seed)
    assert {t.name for t in found} == {"Song"}


def test_usb_by_gesture_does_not_match(seed):
    assert match_terminal(gesture("usb", 0, 10), seed) == frozenset()


def test_unknown_word_matches_nothing(seed):
    assert match_terminal(speech("xyzzy", 0, 10), seed) == frozenset()


def test_match_is_case_insensitive(seed):
    assert {t.name for t in match_terminal(speech("Play", 0, 10), seed)} == {"Play"}


# --- recognize ---------------------------------------------------------------------------

def test_help_accepted_via_unit_rules(seed):
    table = recognize(binarize(seed), sentence_of("help"))
    assert table.accepted
    assert {"NOUN", "NP", "S"} <= table.labels(0, 1)


def test_play_this_song_accepted(seed):
    table = recognize(binarize(seed), sentence_of("play", "this", "song"))
    assert table.accepted
    assert "NP" in table.labels(1, 2)
    assert "VP" in table.labels(0, 3)


def test_unknown_tokens_not_accepted(seed):
    table = recognize(binarize(seed), sentence_of("set", "to", "15"))
    assert not table.accepted
    assert table.labels(0, 1) == frozenset()


def test_empty_sentence_rejected(seed):
    with pytest.raises(EmptyInputError, match="empty input"):
        recognize(binarize(seed), sentence_of())


# --- extract_trees ---------------------------------------------------------------------------

def shape(tree: ParseTree):
    if tree.is_leaf:
        return tree.symbol
    return (tree.symbol, tree.production_id, tuple(shape(c) for c in tree.children))


def test_s3_has_exactly_one_tree(seed):
    bg = binarize(seed)
    table = recognize(bg, sentence_of("play", "this", "song"))
    trees = extract_trees(table, bg, limit=10)
    assert len(trees) == 1
    assert shape(trees[0]) == (
        "S", "P2",
        (("VP", "P4", (
            ("VERBT", "P12", ("Play",)),
            ("NP", "P5", (("DT", "P11", ("This",)), ("NOUN", "P17", ("Song",)))),
        )),),
    )


def test_help_has_exactly_one_tree(seed):
    bg = binarize(seed)
    table = recognize(bg, sentence_of("help"))
    trees = extract_trees(table, bg, limit=10)
    assert len(trees) == 1
    assert shape(trees[0]) == ("S", "P1", (("NOUN", "P13", ("Help",)),))


def _toy_ambiguous() -> MultimodalGrammar:
    return MultimodalGrammar(
        terminals=(make_terminal("a", {Modality.SPEECH}, SynRole.NOUN),),
        nonterminals=frozenset({"S"}),
        productions=(
            Production("T1", "S", ("S", "S")),
            Production("T2", "S", ("a",)),
        ),
        start="S",
    )


def test_catalan_ambiguity_enumerated_in_order():
    g = _toy_ambiguous()
    bg = binarize(g)
    table = recognize(bg, sentence_of("a", "a", "a"))
    trees = extract_trees(table, bg, limit=10)
    assert len(trees) == 2  # C(2) = 2
    seqs = [t.pid_sequence() for t in trees]
    assert seqs == sorted(seqs)
    assert seqs[0] == ("T1", "T1", "T2", "T2", "T2")  # left-branching first


def test_long_rule_tree_collapses_synthetic_nodes():
    g = MultimodalGrammar(
        terminals=tuple(
            make_terminal(c, {Modality.SPEECH}, SynRole.NOUN) for c in "bcd"
        ),
        nonterminals=frozenset({"A"}),
        productions=(Production("P9", "A", ("b", "c", "d")),),
        start="A",
    )
    bg = binarize(g)
    table = recognize(bg, sentence_of("b", "c", "d"))
    (tree,) = extract_trees(table, bg, limit=5)
    # one internal node over the original production, no P9#1 anywhere
    assert shape(tree) == ("A", "P9", ("b", "c", "d"))
    assert all("#" not in n.symbol for n in _walk(tree))


def test_extract_on_failed_table_raises(seed):
    bg = binarize(seed)
    table = recognize(bg, sentence_of("set", "to", "15"))
    with pytest.raises(NoParseError, match="no parse"):
        extract_trees(table, bg)


def test_first_tree_is_stable_across_runs(seed):
    bg = binarize(seed)
    for values in (("play", "this", "song"), ("help",), ("turn on", "this", "defrost")):
        tables = [recognize(bg, sentence_of(*values)) for _ in range(3)]
        shapes = {shape(extract_trees(t, bg, limit=1)[0]) for t in tables}
        assert len(shapes) == 1


# --- evaluate_attributes ----------------------------------------------------------------------

def _parsed(seed, *values, modalities=None):
    toks = []
    for i, v in enumerate(values):
        mod = (modalities or {}).get(i, Modality.SPEECH)
        toks.append(MultimodalToken(v, mod, i * 400, i * 400 + 300, source_id="t"))
    from magfuse import merge_streams

    s = merge_streams([toks])
    result = parse(seed, s)
    assert isinstance(result, ParseTree)
    return result


def test_s3_attributes(seed):
    tree = _parsed(seed, "play", "this", "song")
    assert tree.attrs["val"] == "play song"
    assert tree.attrs["mod"] == {Modality.SPEECH}


def test_s3_attributes_with_gesture_noun(seed):
    tree = _parsed(seed, "play", "this", "song", modalities={2: Modality.GESTURE})
    assert tree.attrs["val"] == "play song"
    assert tree.attrs["mod"] == {Modality.SPEECH, Modality.GESTURE}


def test_deictic_leaf_attributes(seed):
    tree = _parsed(seed, "play", "this", "song")
    leaf = tree.leaves()[1]
    assert leaf.attrs == {
        "val": "this",
        "mod": frozenset({Modality.SPEECH}),
        "synrole": SynRole.DEICTIC,
        "coop": CoopType.COMPLEMENTARY,
    }


def test_help_copies_value_up(seed):
    tree = _parsed(seed, "help")
    assert tree.production_id == "P1"
    assert tree.attrs["val"] == "help"


def test_attribute_determinism(seed):
    bg = binarize(seed)
    table = recognize(bg, sentence_of("save", "this", "station"))
    tree = extract_trees(table, bg, limit=1)[0]
    first = evaluate_attributes(tree, seed)
    second = evaluate_attributes(tree, seed)
    assert first == second


def test_missing_child_attribute_is_reported():
    g = MultimodalGrammar(
        terminals=(make_terminal("a", {Modality.SPEECH}, SynRole.NOUN),),
        nonterminals=frozenset({"S", "B"}),
        productions=(
            Production(
                "P1", "S", ("B",),
                (
                    SemanticFunction((0, "val"), Ref(1, "val")),
                    SemanticFunction((0, "mod"), Ref(1, "coop")),
                ),
            ),
            Production(
                "P2", "B", ("a",),
                (
                    SemanticFunction((0, "val"), Lit("a")),
                    SemanticFunction((0, "mod"), ModLit(frozenset({Modality.SPEECH}))),
                ),
            ),
        ),
        start="S",
    )
    bg = binarize(g)
    table = recognize(bg, sentence_of("a"))
    tree = extract_trees(table, bg, limit=1)[0]
    with pytest.raises(AttributeEvaluationError, match="P1.*'coop'"):
        evaluate_attributes(tree, g)


def _leaf_mods(tree: ParseTree) -> frozenset:
    return frozenset(leaf.leaf_token.modality for leaf in tree.leaves())


def _walk(tree: ParseTree):
    yield tree
    for c in tree.children:
        yield from _walk(c)


def test_mod_soundness(seed):
    tree = _parsed(seed, "play", "this", "song", modalities={2: Modality.GESTURE})
    for node in _walk(tree):
        assert node.attrs["mod"] <= _leaf_mods(node)
        if node.production_id in ("P4", "P5"):  # functions that union their children
            union = frozenset().union(*(c.attrs["mod"] for c in node.children))
            assert node.attrs["mod"] == union


def test_frontier_matches_tokens(seed):
    s = sentence_of("delete", "this", "phone-book")
    tree = parse(seed, s)
    assert isinstance(tree, ParseTree)
    assert tuple(l.leaf_token for l in tree.leaves()) == s.tokens


# --- parse and NotParseable -------------------------------------------------------------------

def test_unknown_word_yields_cover_report(seed):
    report = parse(seed, sentence_of("turn on", "this", "headlight"))
    assert isinstance(report, NotParseable)
    spans = [(seg.start, seg.end, seg.symbol, seg.value) for seg in report.spans]
    assert spans == [
        (0, 1, "VERBT", None),
        (1, 2, "DT", None),
        (2, 3, None, "headlight"),
    ]
    assert report.unknown_tokens == ((2, "headlight"),)


def test_s2_parse_value(seed):
    tree = parse(seed, sentence_of("turn on", "this", "temperature"))
    assert isinstance(tree, ParseTree)
    assert tree.attrs["val"] == "turn on temperature"


def test_parse_empty_sentence_errors(seed):
    with pytest.raises(EmptyInputError):
        parse(seed, sentence_of())


# --- CYK against the independent derivation oracle ----------------------------------------------

def _accepts(g: MultimodalGrammar, letters: tuple[str, ...]) -> bool:
    bg = binarize(g)
    toks = [
        MultimodalToken(c, Modality.SPEECH, i * 10, i * 10 + 5, source_id="t")
        for i, c in enumerate(letters)
    ]
    from magfuse import merge_streams

    return recognize(bg, merge_streams([toks])).accepted


def test_cyk_matches_enumeration_oracle():
    rng = random.Random(7)
    for _ in range(40):
        g = random_grammar(rng)
        language = grammar_strings(g, 5)
        alphabet = sorted(g.terminal_names)
        for n in range(1, 6):
            for letters in itertools.product(alphabet, repeat=n):
                assert _accepts(g, letters) == (letters in language), (
                    f"disagreement on {letters} for grammar {g.productions}"
                )
