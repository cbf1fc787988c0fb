"""CYK chart recognition and synthesized-attribute evaluation.

Recognition runs over the binarized rule view while trees are reconstructed
against the original productions: synthetic binarization symbols collapse and
unit-rule applications become unary nodes, so semantic functions attached to
unit rules still fire during evaluation.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field, replace

from .grammar import (
    ATTR_DOMAINS,
    AttrDomain,
    BinarizedGrammar,
    BinRule,
    Concat,
    CoopType,
    Expr,
    Lit,
    ModLit,
    Modality,
    MultimodalGrammar,
    Ref,
    SynRole,
    TerminalDef,
    binarize,
)
from .tokens import MultimodalSentence, MultimodalToken


class EmptyInputError(ValueError):
    pass


class NoParseError(ValueError):
    pass


class AttributeEvaluationError(ValueError):
    pass


# --- chart ---------------------------------------------------------------------

@dataclass(frozen=True)
class LeafBP:
    terminal: TerminalDef


@dataclass(frozen=True)
class UnaryBP:
    pid: str
    child: str


@dataclass(frozen=True)
class BinaryBP:
    rule: BinRule
    split: int


Backpointer = LeafBP | UnaryBP | BinaryBP


@dataclass
class ChartTable:
    n: int
    cells: dict[tuple[int, int], dict[str, list[Backpointer]]]
    accepted: bool
    start: str
    tokens: tuple[MultimodalToken, ...]

    def labels(self, i: int, length: int) -> frozenset[str]:
        return frozenset(self.cells.get((i, length), ()))


def match_terminal(
    tok: MultimodalToken, g: MultimodalGrammar
) -> frozenset[TerminalDef]:
    """All terminals the token can stand for; empty means unknown token."""
    return g.matching_terminals(tok.value, tok.modality)


def recognize(bg: BinarizedGrammar, s: MultimodalSentence) -> ChartTable:
    """Standard CYK over the sentence tokens, with unit-rule closure per cell."""
    n = len(s.tokens)
    if n == 0:
        raise EmptyInputError("empty input")

    cells: dict[tuple[int, int], dict[str, list[Backpointer]]] = {}
    for i, tok in enumerate(s.tokens):
        labels: dict[str, list[Backpointer]] = {}
        for t in sorted(match_terminal(tok, bg.source), key=lambda t: t.name):
            labels.setdefault(t.name, []).append(LeafBP(t))
            for rule in bg.lexical_index.get(t.name, ()):
                labels.setdefault(rule.lhs, []).append(UnaryBP(rule.origin, t.name))
        _close_units(labels, bg)
        cells[(i, 1)] = labels

    for length in range(2, n + 1):
        for i in range(n - length + 1):
            labels = {}
            for split in range(i + 1, i + length):
                left = cells[(i, split - i)]
                right = cells[(split, i + length - split)]
                for b in left:
                    for c in right:
                        for rule in bg.binary_index.get((b, c), ()):
                            labels.setdefault(rule.lhs, []).append(BinaryBP(rule, split))
            _close_units(labels, bg)
            cells[(i, length)] = labels

    accepted = bg.source.start in cells[(0, n)]
    return ChartTable(n=n, cells=cells, accepted=accepted,
                      start=bg.source.start, tokens=s.tokens)


def _close_units(labels: dict[str, list[Backpointer]], bg: BinarizedGrammar) -> None:
    queue = list(labels)
    while queue:
        child = queue.pop()
        for rule in bg.unit_index.get(child, ()):
            bp = UnaryBP(rule.origin, child)
            existing = labels.get(rule.lhs)
            if existing is None:
                labels[rule.lhs] = [bp]
                queue.append(rule.lhs)
            elif bp not in existing:
                existing.append(bp)


# --- parse trees ----------------------------------------------------------------

@dataclass(frozen=True)
class ParseTree:
    symbol: str
    production_id: str | None = None
    children: tuple["ParseTree", ...] = ()
    leaf_token: MultimodalToken | None = None
    terminal: TerminalDef | None = None
    attrs: dict[str, object] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return self.leaf_token is not None

    def leaves(self) -> list["ParseTree"]:
        if self.is_leaf:
            return [self]
        out: list[ParseTree] = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for c in self.children)

    def pid_sequence(self) -> tuple[str, ...]:
        seq: list[str] = []
        if self.production_id is not None:
            seq.append(self.production_id)
        for c in self.children:
            seq.extend(c.pid_sequence())
        return tuple(seq)

    def key(self):
        return (
            self.symbol,
            self.production_id,
            self.leaf_token,
            tuple(c.key() for c in self.children),
        )


_MAX_ENUMERATED = 10_000


def extract_trees(
    table: ChartTable, bg: BinarizedGrammar, limit: int = 1
) -> list[ParseTree]:
    """Up to ``limit`` distinct trees over the original productions,
    smallest tree first, ties broken by the production-id sequence."""
    if not table.accepted:
        raise NoParseError("no parse")

    def derive(i: int, length: int, label: str, visiting: frozenset[str]) -> list[ParseTree]:
        trees: list[ParseTree] = []
        for bp in table.cells[(i, length)].get(label, ()):
            if isinstance(bp, LeafBP):
                trees.append(
                    ParseTree(symbol=label, leaf_token=table.tokens[i], terminal=bp.terminal)
                )
            elif isinstance(bp, UnaryBP):
                if bp.child in visiting:
                    continue  # unit cycle; larger trees add nothing distinct
                for sub in derive(i, length, bp.child, visiting | {label}):
                    trees.append(
                        ParseTree(symbol=label, production_id=bp.pid, children=(sub,))
                    )
            else:
                origin = bg.source.production(bp.rule.origin)
                for seq in _expand_chain(i, length, bp):
                    trees.append(
                        ParseTree(symbol=origin.lhs, production_id=origin.pid, children=seq)
                    )
            if len(trees) > _MAX_ENUMERATED:
                raise NoParseError("ambiguity explosion while enumerating trees")
        return trees

    def _expand_chain(i: int, length: int, bp: BinaryBP) -> list[tuple[ParseTree, ...]]:
        split = bp.split
        left = derive(i, split - i, bp.rule.rhs[0], frozenset())
        right_label = bp.rule.rhs[1]
        right_i, right_len = split, i + length - split
        tails: list[tuple[ParseTree, ...]] = []
        if right_label in bg.synthetic:
            for bp2 in table.cells[(right_i, right_len)].get(right_label, ()):
                assert isinstance(bp2, BinaryBP)
                tails.extend(_expand_chain(right_i, right_len, bp2))
        else:
            tails = [(t,) for t in derive(right_i, right_len, right_label, frozenset())]
        return [(l,) + tail for l in left for tail in tails]

    all_trees = derive(0, table.n, table.start, frozenset())
    unique: dict[object, ParseTree] = {}
    for t in all_trees:
        unique.setdefault(t.key(), t)
    ordered = sorted(unique.values(), key=lambda t: (t.node_count(), t.pid_sequence()))
    return ordered[:limit]


# --- attribute evaluation --------------------------------------------------------

def evaluate_attributes(tree: ParseTree, g: MultimodalGrammar) -> ParseTree:
    """Fill synthesized attributes bottom-up.

    Leaves take val/synrole/coop from the matched terminal and mod from the
    actual token modality; internal nodes run their production's semantic
    functions. Inherited targets are stored in the grammar but not evaluated.
    """
    if tree.is_leaf:
        assert tree.terminal is not None
        attrs: dict[str, object] = {
            "val": tree.terminal.val,
            "mod": frozenset({tree.leaf_token.modality}),
            "synrole": tree.terminal.synrole,
        }
        if tree.terminal.coop is not None:
            attrs["coop"] = tree.terminal.coop
        return replace(tree, attrs=attrs)

    children = tuple(evaluate_attributes(c, g) for c in tree.children)
    node = replace(tree, children=children)
    prod = g.production(tree.production_id)
    attrs = {}
    actual_mods = frozenset(
        leaf.leaf_token.modality for leaf in node.leaves()
    )
    for fn in prod.semantics:
        occ, attr = fn.target
        if occ != 0:
            continue  # inherited-attribute evaluation is out of scope
        attrs[attr] = _eval_expr(fn.expr, attr, node, prod.pid, actual_mods)
    for required in ("val", "mod"):
        if required not in attrs:
            raise AttributeEvaluationError(
                f"{prod.pid}: no semantic function defines {required!r} on the LHS"
            )
    return replace(node, attrs=attrs)


def _eval_expr(
    expr: Expr, attr: str, node: ParseTree, pid: str, actual_mods: frozenset[Modality]
):
    if isinstance(expr, Lit):
        domain = ATTR_DOMAINS.get(attr)
        if domain is AttrDomain.SYNROLE:
            return SynRole(expr.value)
        if domain is AttrDomain.COOP:
            return CoopType(expr.value)
        return expr.value
    if isinstance(expr, ModLit):
        # declared sets are admissibility records; the value is what was used
        return expr.mods & actual_mods
    if isinstance(expr, Ref):
        child = node.children[expr.occurrence - 1]
        if expr.attr not in child.attrs:
            raise AttributeEvaluationError(
                f"{pid}: attribute {expr.attr!r} undefined on occurrence {expr.occurrence}"
            )
        return child.attrs[expr.attr]
    if isinstance(expr, Concat):
        left = _eval_expr(expr.left, attr, node, pid, actual_mods)
        right = _eval_expr(expr.right, attr, node, pid, actual_mods)
        if isinstance(left, str) and isinstance(right, str):
            return f"{left} {right}"
        if isinstance(left, frozenset) and isinstance(right, frozenset):
            return left | right
        raise AttributeEvaluationError(
            f"{pid}: cannot concatenate {type(left).__name__} with {type(right).__name__}"
        )
    raise TypeError(f"unknown expression {expr!r}")


# --- full pipeline ----------------------------------------------------------------

@dataclass(frozen=True)
class CoverSegment:
    start: int
    end: int
    symbol: str | None  # None marks an unknown single token
    value: str | None = None


@dataclass
class NotParseable:
    """Recognition failure report, the input to the rule learner."""

    sentence: MultimodalSentence
    chart: ChartTable
    spans: tuple[CoverSegment, ...]

    @property
    def unknown_tokens(self) -> tuple[tuple[int, str], ...]:
        return tuple(
            (i, tok.value)
            for i, tok in enumerate(self.sentence.tokens)
            if not self.chart.cells[(i, 1)]
        )


_BIN_CACHE: "OrderedDict[str, BinarizedGrammar]" = OrderedDict()
_BIN_CACHE_SIZE = 32


def binarized(g: MultimodalGrammar) -> BinarizedGrammar:
    """Binarize with a small fingerprint-keyed cache (grammars are immutable)."""
    key = g.fingerprint()
    bg = _BIN_CACHE.get(key)
    if bg is None:
        bg = binarize(g)
        _BIN_CACHE[key] = bg
        while len(_BIN_CACHE) > _BIN_CACHE_SIZE:
            _BIN_CACHE.popitem(last=False)
    return bg


def maximal_cover(table: ChartTable, bg: BinarizedGrammar) -> tuple[CoverSegment, ...]:
    """Greedy left-to-right tiling by the longest chart constituents.

    At each position the longest span labeled by a real nonterminal wins;
    among equally long labels, ones the start symbol can reach through unit
    rules are preferred, then the lexicographically smallest. Tokens with no
    chart entry become single-token unknown segments.
    """
    preferred = bg.unit_closure.get(table.start, frozenset()) - {table.start}
    nts = bg.source.nonterminals
    segments: list[CoverSegment] = []
    i = 0
    while i < table.n:
        best: tuple[int, str] | None = None
        for length in range(table.n - i, 0, -1):
            candidates = [sym for sym in table.cells[(i, length)] if sym in nts]
            if candidates:
                candidates.sort(key=lambda s: (s not in preferred, s))
                best = (length, candidates[0])
                break
        if best is None:
            segments.append(
                CoverSegment(i, i + 1, None, table.tokens[i].value)
            )
            i += 1
        else:
            segments.append(CoverSegment(i, i + best[0], best[1]))
            i += best[0]
    return tuple(segments)


def parse(
    g: MultimodalGrammar, s: MultimodalSentence
) -> ParseTree | NotParseable:
    """Recognize, pick the deterministic first tree, and evaluate attributes."""
    bg = binarized(g)
    table = recognize(bg, s)
    if not table.accepted:
        return NotParseable(sentence=s, chart=table, spans=maximal_cover(table, bg))
    tree = extract_trees(table, bg, limit=1)[0]
    return evaluate_attributes(tree, g)


def tree_to_wire(tree: ParseTree) -> dict:
    """JSON-ready view of an attributed tree."""
    attrs = {}
    for name, value in tree.attrs.items():
        if isinstance(value, frozenset):
            attrs[name] = sorted(m.value for m in value)
        elif isinstance(value, (SynRole, CoopType)):
            attrs[name] = value.value
        else:
            attrs[name] = value
    out: dict = {"symbol": tree.symbol, "production_id": tree.production_id, "attrs": attrs}
    if tree.is_leaf:
        from .tokens import token_to_wire

        out["token"] = token_to_wire(tree.leaf_token)
    else:
        out["children"] = [tree_to_wire(c) for c in tree.children]
    return out
