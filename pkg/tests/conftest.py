from __future__ import annotations

import random

import pytest

from magfuse import (
    FusionConfig,
    Modality,
    MultimodalGrammar,
    MultimodalSentence,
    MultimodalToken,
    Production,
    SynRole,
    make_terminal,
    merge_streams,
    seed_grammar,
)


@pytest.fixture(scope="session")
def seed() -> MultimodalGrammar:
    return seed_grammar()


def speech(value: str, t0: int, t1: int, src: str = "asr") -> MultimodalToken:
    return MultimodalToken(value, Modality.SPEECH, t0, t1, source_id=src)


def gesture(
    value: str, t0: int, t1: int, target: str | None = None, src: str = "gr"
) -> MultimodalToken:
    return MultimodalToken(value, Modality.GESTURE, t0, t1, target_id=target, source_id=src)


def sentence_of(*values: str, modality: Modality = Modality.SPEECH) -> MultimodalSentence:
    """Evenly timed sentence out of plain word values."""
    toks = [
        MultimodalToken(v, modality, i * 400, i * 400 + 300, source_id="t")
        for i, v in enumerate(values)
    ]
    return merge_streams([toks], FusionConfig())


def wire(tok: MultimodalToken) -> dict:
    return {
        "value": tok.value,
        "modality": tok.modality.value,
        "t_start": tok.t_start,
        "t_end": tok.t_end,
        "target_id": tok.target_id,
        "source_id": tok.source_id,
    }


def random_grammar(rng: random.Random, max_nts: int = 6, max_rules: int = 12) -> MultimodalGrammar:
    """Small random CFG over a 2-3 letter alphabet for oracle comparisons."""
    letters = "abc"[: rng.randint(2, 3)]
    terms = tuple(
        make_terminal(c, {Modality.SPEECH}, SynRole.NOUN) for c in letters
    )
    n_nts = rng.randint(2, max_nts)
    nts = [f"N{i}" for i in range(n_nts)]
    symbols = list(letters) + nts
    prods = []
    for k in range(rng.randint(3, max_rules)):
        lhs = rng.choice(nts)
        rhs = tuple(rng.choice(symbols) for _ in range(rng.choice((1, 1, 2, 2, 2, 3))))
        prods.append(Production(f"R{k}", lhs, rhs))
    return MultimodalGrammar(
        terminals=terms,
        nonterminals=frozenset(nts),
        productions=tuple(prods),
        start="N0",
    )
