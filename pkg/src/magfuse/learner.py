"""Incremental grammar learning from unparseable sentences.

When recognition fails, the chart still holds the constituents that did
parse. The learner tiles the sentence with the longest of those, asks the
user for the syntactic role of each unknown token, and proposes the smallest
rule set that makes the sentence derivable: one terminal production per
unknown token plus, if the sentence still does not reduce to the start
symbol, exactly one structural production over the cover. Nothing is ever
committed without an explicit user confirmation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .commands import CommandFrame, MeaningRegistry
from .grammar import (
    Concat,
    CoopType,
    Modality,
    MultimodalGrammar,
    Production,
    Ref,
    SemanticFunction,
    SynRole,
    TerminalDef,
    lexical_production,
    validate_grammar,
)
from .magfile import save_grammar
from .parser import CoverSegment, NotParseable, ParseTree, binarized, maximal_cover, parse
from .tokens import MultimodalSentence


class AlreadyParseableError(ValueError):
    pass


class MissingRolesError(ValueError):
    def __init__(self, missing: list[str]):
        super().__init__(f"roles missing for unknown tokens: {', '.join(missing)}")
        self.missing = tuple(missing)


class MeaningRequiredError(ValueError):
    def __init__(self) -> None:
        super().__init__("meaning required")


class StaleDeltaError(ValueError):
    def __init__(self) -> None:
        super().__init__("stale delta: grammar changed since proposal")


#: Existing nonterminal conventionally hosting each terminal role; roles
#: without a seed host get a fresh preterminal.
ROLE_HOSTS = {
    SynRole.VERB: "VERBT",
    SynRole.NOUN: "NOUN",
    SynRole.DEICTIC: "DT",
    SynRole.DETERMINER: "DT",
    SynRole.NOUN_PHRASE: "NP",
    SynRole.VERB_PHRASE: "VP",
    SynRole.PREPOSITION: "PREP",
    SynRole.ADJECTIVE: "ADJ",
    SynRole.CONJUNCTION: "CONJ",
}


@dataclass(frozen=True)
class ConstituentCover:
    segments: tuple[CoverSegment, ...]

    def unknown_values(self) -> tuple[str, ...]:
        # case-variant repeats of one word are one unknown
        seen: dict[str, str] = {}
        for seg in self.segments:
            if seg.symbol is None and seg.value.casefold() not in seen:
                seen[seg.value.casefold()] = seg.value
        return tuple(seen.values())


@dataclass(frozen=True)
class RuleDelta:
    """A proposed, not yet committed, grammar extension."""

    new_terminals: tuple[TerminalDef, ...]
    new_nonterminals: frozenset[str]
    new_productions: tuple[Production, ...]
    rationale: tuple[str, ...]
    sentence: MultimodalSentence
    meaning: CommandFrame
    base_fingerprint: str

    def apply_to(self, g: MultimodalGrammar) -> MultimodalGrammar:
        return g.with_additions(
            terminals=self.new_terminals,
            nonterminals=self.new_nonterminals,
            productions=self.new_productions,
        )


def find_cover(report: NotParseable, g: MultimodalGrammar) -> ConstituentCover:
    """Greedy longest-constituent tiling of the failed sentence."""
    return ConstituentCover(maximal_cover(report.chart, binarized(g)))


def propose_delta(
    g: MultimodalGrammar,
    s: MultimodalSentence,
    meaning: CommandFrame | None,
    roles: dict[str, SynRole],
) -> RuleDelta:
    """Build the minimum rule set that makes ``s`` parseable.

    One terminal production per distinct unknown token (preterminal chosen by
    the user-assigned role), then a single structural production over the
    recomputed cover unless the new terminals alone already let the start
    symbol derive the sentence.
    """
    result = parse(g, s)
    if isinstance(result, ParseTree):
        raise AlreadyParseableError("sentence already parseable")
    if meaning is None:
        raise MeaningRequiredError()

    cover = find_cover(result, g)
    unknown = cover.unknown_values()
    folded_roles = {k.casefold(): v for k, v in roles.items()}
    missing = [v for v in unknown if v.casefold() not in folded_roles]
    if missing:
        raise MissingRolesError(missing)

    taken = {t.name for t in g.terminals} | set(g.nonterminals)
    pid_counter = _next_learned_id(g)
    terminals: list[TerminalDef] = []
    productions: list[Production] = []
    nonterminals: set[str] = set()
    rationale: list[str] = []

    for value in unknown:
        mods = frozenset(
            tok.modality for tok in s.tokens if tok.value.casefold() == value.casefold()
        )
        if Modality.GESTURE in mods:
            mods = mods | {Modality.GESTURE}
        role = folded_roles[value.casefold()]
        host = ROLE_HOSTS[role]
        if host not in g.nonterminals:
            nonterminals.add(host)
        term = TerminalDef(
            name=_fresh_name(value, taken),
            val=value.casefold(),
            admissible_mods=mods,
            synrole=role,
            coop=CoopType.COMPLEMENTARY if role is SynRole.DEICTIC else None,
        )
        taken.add(term.name)
        terminals.append(term)
        pid = f"L{next(pid_counter)}"
        productions.append(lexical_production(pid, host, term))
        rationale.append(f"{pid}: unknown token {value!r} taught as {role.value} -> {host}")

    g1 = g.with_additions(
        terminals=tuple(terminals),
        nonterminals=frozenset(nonterminals),
        productions=tuple(productions),
    )
    retry = parse(g1, s)
    if isinstance(retry, NotParseable):
        segments = find_cover(retry, g1).segments
        labels = tuple(seg.symbol for seg in segments)
        assert all(labels), "cover still has unknown tokens after terminal additions"
        pid = f"L{next(pid_counter)}"
        productions.append(_structural_production(pid, g.start, labels))
        rationale.append(
            f"{pid}: structural rule {g.start} -> {' '.join(labels)} over the cover"
        )

    delta = RuleDelta(
        new_terminals=tuple(terminals),
        new_nonterminals=frozenset(nonterminals),
        new_productions=tuple(productions),
        rationale=tuple(rationale),
        sentence=s,
        meaning=meaning,
        base_fingerprint=g.fingerprint(),
    )
    final = delta.apply_to(g)
    report = validate_grammar(final)
    assert report.ok, f"delta produced invalid grammar: {report.violations}"
    assert isinstance(parse(final, s), ParseTree), "delta failed to make sentence parseable"
    return delta


def _structural_production(pid: str, start: str, labels: tuple[str, ...]) -> Production:
    val = Ref(1, "val")
    mod = Ref(1, "mod")
    for k in range(2, len(labels) + 1):
        val = Concat(val, Ref(k, "val"))
        mod = Concat(mod, Ref(k, "mod"))
    return Production(
        pid,
        start,
        labels,
        (
            SemanticFunction((0, "val"), val),
            SemanticFunction((0, "mod"), mod),
        ),
    )


def _next_learned_id(g: MultimodalGrammar):
    used = [
        int(m.group(1))
        for p in g.productions
        if (m := re.fullmatch(r"L(\d+)", p.pid))
    ]
    counter = max(used, default=0)

    def gen():
        k = counter
        while True:
            k += 1
            yield k

    return gen()


def _fresh_name(value: str, taken: set[str]) -> str:
    base = value[:1].upper() + value[1:] if value else value
    name = base
    suffix = 2
    while name in taken:
        name = f"{base}_{suffix}"
        suffix += 1
    return name


def apply_delta(
    g: MultimodalGrammar,
    d: RuleDelta,
    confirmed: bool,
    registry: MeaningRegistry | None = None,
) -> tuple[MultimodalGrammar, MeaningRegistry | None]:
    """Commit or discard a proposed delta.

    On confirmation the returned grammar contains every old rule plus the
    delta, and the sentence's meaning is registered; on rejection both values
    come back unchanged. The input grammar is never mutated.
    """
    if g.fingerprint() != d.base_fingerprint:
        raise StaleDeltaError()
    if not confirmed:
        return g, registry
    g2 = d.apply_to(g)
    report = validate_grammar(g2)
    assert report.ok, f"confirmed delta yields invalid grammar: {report.violations}"
    reg2 = registry.register_sentence(d.sentence, d.meaning) if registry else None
    return g2, reg2


def render_delta(d: RuleDelta) -> str:
    """The delta as a reviewable ``.mag`` fragment (term and prod lines)."""
    tmp = MultimodalGrammar(
        terminals=d.new_terminals,
        nonterminals=d.new_nonterminals | {p.lhs for p in d.new_productions},
        productions=d.new_productions,
        start=next(iter({p.lhs for p in d.new_productions}), "S"),
    )
    lines = [
        line
        for line in save_grammar(tmp).splitlines()
        if line.startswith(("term ", "prod "))
    ]
    return "\n".join(lines) + "\n"
