"""Multimodal attribute grammars.

A grammar here is a context-free core (terminals, nonterminals, productions,
start symbol) extended with per-symbol attribute declarations and per-production
semantic functions. Terminal definitions carry the four multimodal synthesized
attributes: a concept value, the set of admissible input modalities, a syntactic
role, and an optional cooperation type.

Grammars are immutable values; every operation that "changes" a grammar builds
a new one.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from enum import Enum


class Modality(str, Enum):
    SPEECH = "speech"
    HANDWRITING = "handwriting"
    GESTURE = "gesture"
    SKETCH = "sketch"


class SynRole(str, Enum):
    NOUN_PHRASE = "noun_phrase"
    VERB_PHRASE = "verb_phrase"
    DETERMINER = "determiner"
    VERB = "verb"
    NOUN = "noun"
    ADJECTIVE = "adjective"
    PREPOSITION = "preposition"
    DEICTIC = "deictic"
    CONJUNCTION = "conjunction"


class CoopType(str, Enum):
    COMPLEMENTARY = "complementary"
    REDUNDANT = "redundant"


class AttrKind(str, Enum):
    SYNTHESIZED = "synthesized"
    INHERITED = "inherited"


class AttrDomain(str, Enum):
    CONCEPT = "concept-string"
    MODALITY_SET = "modality-set"
    SYNROLE = "synrole"
    COOP = "coop"


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    kind: AttrKind
    domain: AttrDomain


#: The four multimodal synthesized attributes every terminal carries.
MS_ATTRS = (
    AttributeDecl("val", AttrKind.SYNTHESIZED, AttrDomain.CONCEPT),
    AttributeDecl("mod", AttrKind.SYNTHESIZED, AttrDomain.MODALITY_SET),
    AttributeDecl("synrole", AttrKind.SYNTHESIZED, AttrDomain.SYNROLE),
    AttributeDecl("coop", AttrKind.SYNTHESIZED, AttrDomain.COOP),
)

ATTR_DOMAINS = {d.name: d.domain for d in MS_ATTRS}


@dataclass(frozen=True)
class TerminalDef:
    """One terminal symbol with its multimodal attribute values.

    ``admissible_mods`` is the set of input modalities a token may arrive by
    and still match this terminal; the evaluated ``mod`` attribute of a parse
    leaf is the actual modality of the matched token, not this set.
    """

    name: str
    val: str
    admissible_mods: frozenset[Modality]
    synrole: SynRole
    coop: CoopType | None = None


def make_terminal(
    name: str,
    mods: frozenset[Modality] | set[Modality],
    synrole: SynRole,
    coop: CoopType | None = None,
    val: str | None = None,
) -> TerminalDef:
    """Build a TerminalDef; ``val`` defaults to the lowercased name."""
    return TerminalDef(
        name=name,
        val=name.lower() if val is None else val,
        admissible_mods=frozenset(mods),
        synrole=synrole,
        coop=coop,
    )


# --- semantic-function expressions -------------------------------------------

@dataclass(frozen=True)
class Lit:
    """String literal (concept value, synrole or coop name)."""

    value: str


@dataclass(frozen=True)
class ModLit:
    """Modality-set literal.

    On a terminal production this records the admissible modalities; the
    evaluated value is the actual modality set of the leaves below the node
    (intersected with the declared set), so a node's mod never exceeds what
    was really used.
    """

    mods: frozenset[Modality]


@dataclass(frozen=True)
class Ref:
    """Reference to an attribute of an occurrence in the production.

    Occurrence 0 is the LHS, occurrences 1..n the RHS symbols in order.
    """

    occurrence: int
    attr: str


@dataclass(frozen=True)
class Concat:
    """``++``: space-joined concatenation on values, union on modality sets."""

    left: "Expr"
    right: "Expr"


Expr = Lit | ModLit | Ref | Concat


@dataclass(frozen=True)
class SemanticFunction:
    target: tuple[int, str]  # (occurrence index, attribute name)
    expr: Expr


@dataclass(frozen=True)
class Production:
    pid: str
    lhs: str
    rhs: tuple[str, ...]
    semantics: tuple[SemanticFunction, ...] = ()


def _default_decls(
    terminals: tuple[TerminalDef, ...], nonterminals: frozenset[str]
) -> tuple[tuple[str, tuple[AttributeDecl, ...]], ...]:
    decls = []
    for t in terminals:
        decls.append((t.name, MS_ATTRS))
    for nt in sorted(nonterminals):
        decls.append((nt, MS_ATTRS))
    return tuple(decls)


@dataclass(frozen=True, eq=False)
class MultimodalGrammar:
    """The grammar triple: CFG core, attribute declarations, semantic functions.

    ``attr_decls`` maps each symbol to its declared attributes; inherited
    declarations are representable but never evaluated.
    """

    terminals: tuple[TerminalDef, ...]
    nonterminals: frozenset[str]
    productions: tuple[Production, ...]
    start: str
    attr_decls: tuple[tuple[str, tuple[AttributeDecl, ...]], ...] = ()

    def __post_init__(self) -> None:
        if not self.attr_decls:
            object.__setattr__(
                self, "attr_decls", _default_decls(self.terminals, self.nonterminals)
            )

    def __eq__(self, other: object) -> bool:
        # Declaration order is irrelevant; everything else is positional.
        if not isinstance(other, MultimodalGrammar):
            return NotImplemented
        return (
            self.terminals == other.terminals
            and self.nonterminals == other.nonterminals
            and self.productions == other.productions
            and self.start == other.start
            and dict(self.attr_decls) == dict(other.attr_decls)
        )

    @property
    def terminal_names(self) -> frozenset[str]:
        return frozenset(t.name for t in self.terminals)

    def terminal(self, name: str) -> TerminalDef:
        for t in self.terminals:
            if t.name == name:
                return t
        raise KeyError(name)

    def production(self, pid: str) -> Production:
        for p in self.productions:
            if p.pid == pid:
                return p
        raise KeyError(pid)

    def decls_for(self, symbol: str) -> tuple[AttributeDecl, ...]:
        for sym, decls in self.attr_decls:
            if sym == symbol:
                return decls
        return ()

    def matching_terminals(self, value: str, modality: Modality) -> frozenset[TerminalDef]:
        """Terminals whose val equals ``value`` (case-insensitive) and whose
        admissible modalities include ``modality``."""
        needle = value.casefold()
        return frozenset(
            t for t in self.terminals
            if t.val.casefold() == needle and modality in t.admissible_mods
        )

    def deictic_values(self) -> frozenset[str]:
        return frozenset(
            t.val for t in self.terminals if t.synrole is SynRole.DEICTIC
        )

    def fingerprint(self) -> str:
        """Stable content hash, used for delta staleness and caching."""
        from .magfile import save_grammar

        return hashlib.sha256(save_grammar(self).encode("utf-8")).hexdigest()

    def with_additions(
        self,
        terminals: tuple[TerminalDef, ...] = (),
        nonterminals: frozenset[str] = frozenset(),
        productions: tuple[Production, ...] = (),
    ) -> "MultimodalGrammar":
        """New grammar with rules added; nothing is ever removed."""
        new_nts = self.nonterminals | nonterminals
        new_terms = self.terminals + terminals
        return replace(
            self,
            terminals=new_terms,
            nonterminals=new_nts,
            productions=self.productions + productions,
            attr_decls=self.attr_decls
            + _default_decls(terminals, nonterminals - self.nonterminals),
        )


# --- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_grammar(g: MultimodalGrammar) -> ValidationReport:
    """Check every structural invariant; violations are data, not exceptions."""
    bad: list[str] = []
    term_names = [t.name for t in g.terminals]
    term_set = set(term_names)

    for name in term_names:
        if term_names.count(name) > 1:
            bad.append(f"duplicate terminal name {name!r}")
    for t in g.terminals:
        if not t.admissible_mods:
            bad.append(f"terminal {t.name!r}: admissible_mods must be non-empty")
        if not t.val:
            bad.append(f"terminal {t.name!r}: empty val")

    overlap = term_set & g.nonterminals
    if overlap:
        bad.append(f"symbols both terminal and nonterminal: {sorted(overlap)}")
    if g.start not in g.nonterminals:
        bad.append(f"start symbol {g.start!r} is not a nonterminal")

    seen_pids: set[str] = set()
    symbols = term_set | g.nonterminals
    for p in g.productions:
        if p.pid in seen_pids:
            bad.append(f"duplicate production id {p.pid}")
        seen_pids.add(p.pid)
        if len(p.rhs) < 1:
            bad.append(f"{p.pid}: rhs length >= 1 required")
        if p.lhs not in g.nonterminals:
            bad.append(f"{p.pid}: lhs {p.lhs!r} is not a nonterminal")
        for sym in p.rhs:
            if sym not in symbols:
                bad.append(f"{p.pid}: unknown rhs symbol {sym!r}")
        bad.extend(_check_semantics(g, p))

    for sym, decls in g.attr_decls:
        names = [d.name for d in decls]
        if len(names) != len(set(names)):
            bad.append(f"attribute names not unique for symbol {sym!r}")
        if sym in term_set:
            missing = {"val", "mod", "synrole", "coop"} - set(names)
            if missing:
                bad.append(
                    f"terminal {sym!r}: missing multimodal attributes {sorted(missing)}"
                )

    return ValidationReport(tuple(bad))


def _check_semantics(g: MultimodalGrammar, p: Production) -> list[str]:
    bad: list[str] = []
    n = len(p.rhs)
    assigned: set[tuple[int, str]] = set()
    for fn in p.semantics:
        occ, attr = fn.target
        label = f"{p.pid}: function targeting occurrence {occ} attribute {attr!r}"
        if not 0 <= occ <= n:
            bad.append(f"{label}: occurrence does not exist (rhs length {n})")
            continue
        if fn.target in assigned:
            bad.append(f"{label}: attribute assigned twice")
        assigned.add(fn.target)
        for ref in _refs(fn.expr):
            if not 0 <= ref.occurrence <= n:
                bad.append(f"{label}: references occurrence {ref.occurrence} (rhs length {n})")
            elif occ == 0 and ref.occurrence == 0:
                bad.append(f"{label}: synthesized LHS target may reference only RHS occurrences")
    return bad


def _refs(expr: Expr) -> list[Ref]:
    if isinstance(expr, Ref):
        return [expr]
    if isinstance(expr, Concat):
        return _refs(expr.left) + _refs(expr.right)
    return []


# --- the driver-assistance seed grammar ---------------------------------------

def lexical_production(pid: str, lhs: str, term: TerminalDef) -> Production:
    """Terminal production with the usual val/mod/synrole(/coop) functions."""
    sems = [
        SemanticFunction((0, "val"), Lit(term.val)),
        SemanticFunction((0, "mod"), ModLit(term.admissible_mods)),
        SemanticFunction((0, "synrole"), Lit(term.synrole.value)),
    ]
    if term.coop is not None:
        sems.append(SemanticFunction((0, "coop"), Lit(term.coop.value)))
    return Production(pid, lhs, (term.name,), tuple(sems))


def _copy_up(pid: str, lhs: str, rhs: tuple[str, ...], src: int) -> Production:
    return Production(
        pid,
        lhs,
        rhs,
        (
            SemanticFunction((0, "val"), Ref(src, "val")),
            SemanticFunction((0, "mod"), Ref(src, "mod")),
        ),
    )


def seed_grammar() -> MultimodalGrammar:
    """The built-in 26-production driver-assistance grammar.

    Commands for calls, media, lights, and climate over speech and pointing:
    six phrase-structure rules and twenty terminal rules whose semantic
    functions fill val/mod/synrole (plus coop on the deictic and on Person).
    """
    sp = frozenset({Modality.SPEECH})
    sg = frozenset({Modality.SPEECH, Modality.GESTURE})
    verbs = [
        ("P7", "Save"), ("P8", "Call"), ("P9", "Recall"), ("P10", "Delete"),
        ("P12", "Play"), ("P20", "Turn off"), ("P24", "Repeat"), ("P25", "Read"),
        ("P26", "Turn on"),
    ]
    nouns = [
        ("P13", "Help", sg), ("P14", "Person", sp), ("P15", "Number", sg),
        ("P16", "Phone-book", sg), ("P17", "Song", sg), ("P18", "CD", sg),
        ("P19", "Station", sg), ("P21", "Temperature", sg), ("P22", "Defrost", sg),
        ("P23", "USB", sp),
    ]

    terminals: dict[str, TerminalDef] = {}
    for _, name in verbs:
        terminals[name] = make_terminal(name, sp, SynRole.VERB)
    for _, name, mods in nouns:
        coop = CoopType.COMPLEMENTARY if name == "Person" else None
        terminals[name] = make_terminal(name, mods, SynRole.NOUN, coop)
    terminals["This"] = make_terminal(name="This", mods=sp, synrole=SynRole.DEICTIC,
                                      coop=CoopType.COMPLEMENTARY)

    productions = [
        _copy_up("P1", "S", ("NOUN",), 1),
        _copy_up("P2", "S", ("VP",), 1),
        _copy_up("P3", "VP", ("VERBT",), 1),
        Production(
            "P4", "VP", ("VERBT", "NP"),
            (
                SemanticFunction((0, "val"), Concat(Ref(1, "val"), Ref(2, "val"))),
                SemanticFunction((0, "mod"), Concat(Ref(1, "mod"), Ref(2, "mod"))),
            ),
        ),
        Production(
            "P5", "NP", ("DT", "NOUN"),
            (
                SemanticFunction((0, "val"), Ref(2, "val")),
                SemanticFunction((0, "mod"), Concat(Ref(1, "mod"), Ref(2, "mod"))),
            ),
        ),
        _copy_up("P6", "NP", ("NOUN",), 1),
    ]
    for pid, name in verbs:
        productions.append(lexical_production(pid, "VERBT", terminals[name]))
    productions.append(lexical_production("P11", "DT", terminals["This"]))
    for pid, name, _ in nouns:
        productions.append(lexical_production(pid, "NOUN", terminals[name]))
    productions.sort(key=lambda p: int(p.pid[1:]))

    return MultimodalGrammar(
        terminals=tuple(terminals.values()),
        nonterminals=frozenset({"NOUN", "VP", "VERBT", "NP", "DT", "S"}),
        productions=tuple(productions),
        start="S",
    )


# --- binarization for CYK ------------------------------------------------------

@dataclass(frozen=True)
class BinRule:
    lhs: str
    rhs: tuple[str, ...]  # length 1 or 2
    origin: str           # id of the originating production


class BinarizedGrammar:
    """CYK-ready view of a grammar: rules of RHS length 1 or 2 only.

    Longer productions are right-binarized with synthetic nonterminals named
    ``<origId>#k``; those never appear in user-facing trees. Unit rules
    (A -> B with B a nonterminal) are kept and closed over transitively so
    attribute evaluation can still see the original rule chain.
    """

    def __init__(self, source: MultimodalGrammar) -> None:
        self.source = source
        rules: list[BinRule] = []
        synthetic: dict[str, str] = {}
        for p in source.productions:
            if len(p.rhs) <= 2:
                rules.append(BinRule(p.lhs, p.rhs, p.pid))
                continue
            lhs = p.lhs
            for k, sym in enumerate(p.rhs[:-2], start=1):
                nxt = f"{p.pid}#{k}"
                synthetic[nxt] = p.pid
                rules.append(BinRule(lhs, (sym, nxt), p.pid))
                lhs = nxt
            rules.append(BinRule(lhs, p.rhs[-2:], p.pid))
        self.rules: tuple[BinRule, ...] = tuple(rules)
        self.synthetic: dict[str, str] = synthetic
        self.provenance: dict[BinRule, str] = {r: r.origin for r in rules}

        term_names = source.terminal_names
        self.lexical_index: dict[str, list[BinRule]] = {}
        self.unit_index: dict[str, list[BinRule]] = {}
        self.binary_index: dict[tuple[str, str], list[BinRule]] = {}
        for r in rules:
            if len(r.rhs) == 1:
                idx = self.lexical_index if r.rhs[0] in term_names else self.unit_index
                idx.setdefault(r.rhs[0], []).append(r)
            else:
                self.binary_index.setdefault((r.rhs[0], r.rhs[1]), []).append(r)

        self.unit_closure = self._close_units()

    def _close_units(self) -> dict[str, frozenset[str]]:
        nts = set(self.source.nonterminals) | set(self.synthetic)
        reach: dict[str, set[str]] = {nt: {nt} for nt in nts}
        changed = True
        while changed:
            changed = False
            for child, rules in self.unit_index.items():
                for r in rules:
                    for a in list(nts):
                        if r.lhs in reach[a] and child not in reach[a]:
                            reach[a].add(child)
                            changed = True
        return {nt: frozenset(s) for nt, s in reach.items()}


def binarize(g: MultimodalGrammar) -> BinarizedGrammar:
    return BinarizedGrammar(g)
