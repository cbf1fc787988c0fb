"""Reading and writing the ``.mag`` grammar file format.

The format is a line-oriented UTF-8 text DSL so that rule deltas stay
human-reviewable in the teach loop::

    start S
    term This { val="this" mod=speech synrole=deictic coop=complementary }
    term "Turn on" { val="turn on" mod=speech synrole=verb }
    prod P5: NP -> DT NOUN { NP.val = NOUN.val ; NP.mod = DT.mod ++ NOUN.mod }

Comments start with ``#``. Symbol names containing whitespace are quoted.
An occurrence index ``[k]`` (0 = LHS, 1.. = RHS positions) is only required
when a symbol occurs more than once in a production.
"""

from __future__ import annotations

import re

from .grammar import (
    ATTR_DOMAINS,
    AttrDomain,
    AttrKind,
    AttributeDecl,
    Concat,
    CoopType,
    Expr,
    Lit,
    ModLit,
    Modality,
    MS_ATTRS,
    MultimodalGrammar,
    Production,
    Ref,
    SemanticFunction,
    SynRole,
    TerminalDef,
    validate_grammar,
)


class GrammarFileError(ValueError):
    """Raised on malformed grammar text, with the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


_BARE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_#'-]*")


def _quote(sym: str) -> str:
    return sym if _BARE.fullmatch(sym) else _qstr(sym)


def _qstr(value: str) -> str:
    return '"' + value.replace('"', '\\"') + '"'


# --- writing -------------------------------------------------------------------

def save_grammar(g: MultimodalGrammar) -> str:
    lines = ["# magfuse grammar", f"start {_quote(g.start)}"]

    inferable = {g.start} | {p.lhs for p in g.productions}
    term_names = g.terminal_names
    for p in g.productions:
        inferable.update(s for s in p.rhs if s not in term_names)
    orphans = sorted(g.nonterminals - inferable)
    if orphans:
        lines.append("nonterm " + " ".join(_quote(s) for s in orphans))

    for sym, decls in g.attr_decls:
        for d in decls:
            if d not in MS_ATTRS:
                lines.append(f"decl {_quote(sym)} {d.kind.value} {d.name} {d.domain.value}")

    lines.append("")
    for t in g.terminals:
        parts = [f'val={_qstr(t.val)}', "mod=" + ",".join(sorted(m.value for m in t.admissible_mods)),
                 f"synrole={t.synrole.value}"]
        if t.coop is not None:
            parts.append(f"coop={t.coop.value}")
        lines.append(f"term {_quote(t.name)} {{ {' '.join(parts)} }}")

    lines.append("")
    for p in g.productions:
        lines.append(_format_production(p))
    return "\n".join(lines) + "\n"


def _format_production(p: Production) -> str:
    rhs = " ".join(_quote(s) for s in p.rhs)
    head = f"prod {p.pid}: {_quote(p.lhs)} -> {rhs}"
    if not p.semantics:
        return head
    occ_syms = (p.lhs,) + p.rhs
    body = " ; ".join(
        f"{_occ(occ_syms, fn.target[0])}.{fn.target[1]} = {_format_expr(occ_syms, fn.expr)}"
        for fn in p.semantics
    )
    return f"{head} {{ {body} }}"


def _occ(occ_syms: tuple[str, ...], k: int) -> str:
    sym = occ_syms[k]
    if occ_syms.count(sym) > 1:
        return f"{_quote(sym)}[{k}]"
    return _quote(sym)


def _format_expr(occ_syms: tuple[str, ...], expr: Expr) -> str:
    if isinstance(expr, Lit):
        return _qstr(expr.value)
    if isinstance(expr, ModLit):
        return '"' + " ".join(sorted(m.value for m in expr.mods)) + '"'
    if isinstance(expr, Ref):
        return f"{_occ(occ_syms, expr.occurrence)}.{expr.attr}"
    if isinstance(expr, Concat):
        return f"{_format_expr(occ_syms, expr.left)} ++ {_format_expr(occ_syms, expr.right)}"
    raise TypeError(f"unknown expression {expr!r}")


# --- reading -------------------------------------------------------------------

def load_grammar(text: str) -> MultimodalGrammar:
    """Parse grammar text; raises GrammarFileError with a line number."""
    start: str | None = None
    terminals: list[TerminalDef] = []
    productions: list[Production] = []
    extra_nts: list[str] = []
    extra_decls: dict[str, list[AttributeDecl]] = {}
    seen_pids: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("start "):
            start = _read_symbol(line[6:].strip(), lineno)
        elif line.startswith("nonterm "):
            extra_nts.extend(_read_symbols(line[8:], lineno))
        elif line.startswith("decl "):
            sym, decl = _parse_decl(line[5:], lineno)
            extra_decls.setdefault(sym, []).append(decl)
        elif line.startswith("term "):
            terminals.append(_parse_term(line[5:], lineno))
        elif line.startswith("prod "):
            p = _parse_prod(line[5:], lineno, {t.name for t in terminals})
            if p.pid in seen_pids:
                raise GrammarFileError(f"duplicate production id {p.pid}", lineno)
            seen_pids.add(p.pid)
            productions.append(p)
        else:
            raise GrammarFileError(f"unrecognized directive: {line.split()[0]!r}", lineno)

    if start is None:
        raise GrammarFileError("missing 'start' directive", 1)

    term_names = {t.name for t in terminals}
    nonterminals = {start} | set(extra_nts) | {p.lhs for p in productions}
    for p in productions:
        nonterminals.update(s for s in p.rhs if s not in term_names)

    # default declarations first, then any explicit extra declarations per symbol
    base: dict[str, tuple[AttributeDecl, ...]] = {}
    for t in terminals:
        base[t.name] = MS_ATTRS
    for nt in sorted(nonterminals):
        base[nt] = MS_ATTRS
    for sym, extra in extra_decls.items():
        base[sym] = base.get(sym, ()) + tuple(extra)

    g = MultimodalGrammar(
        terminals=tuple(terminals),
        nonterminals=frozenset(nonterminals),
        productions=tuple(productions),
        start=start,
        attr_decls=tuple(base.items()),
    )
    # Occurrence references could only be resolved per-production during the
    # line scan; cross-cutting problems surface through the normal validator.
    report = validate_grammar(g)
    if not report.ok:
        raise GrammarFileError("; ".join(report.violations), 0)
    return g


def _read_symbol(text: str, lineno: int) -> str:
    syms = _read_symbols(text, lineno)
    if len(syms) != 1:
        raise GrammarFileError(f"expected one symbol, got {text!r}", lineno)
    return syms[0]


def _read_symbols(text: str, lineno: int) -> list[str]:
    out, rest = [], text.strip()
    while rest:
        sym, rest = _take_symbol(rest, lineno)
        out.append(sym)
        rest = rest.strip()
    return out


def _take_symbol(text: str, lineno: int) -> tuple[str, str]:
    if text.startswith('"'):
        end = text.find('"', 1)
        while end > 0 and text[end - 1] == "\\":
            end = text.find('"', end + 1)
        if end < 0:
            raise GrammarFileError("unterminated quoted symbol", lineno)
        return text[1:end].replace('\\"', '"'), text[end + 1:]
    m = _BARE.match(text)
    if not m:
        raise GrammarFileError(f"expected symbol at {text[:20]!r}", lineno)
    return m.group(0), text[m.end():]


def _parse_decl(body: str, lineno: int) -> tuple[str, AttributeDecl]:
    sym, rest = _take_symbol(body.strip(), lineno)
    parts = rest.split()
    if len(parts) != 3:
        raise GrammarFileError("decl needs: <symbol> <kind> <name> <domain>", lineno)
    kind, name, domain = parts
    try:
        return sym, AttributeDecl(name, AttrKind(kind), AttrDomain(domain))
    except ValueError as exc:
        raise GrammarFileError(str(exc), lineno) from None


_TERM_KV = re.compile(r'(\w+)\s*=\s*("(?:[^"\\]|\\.)*"|[\w,-]+)')


def _parse_term(body: str, lineno: int) -> TerminalDef:
    name, rest = _take_symbol(body.strip(), lineno)
    rest = rest.strip()
    if not (rest.startswith("{") and rest.endswith("}")):
        raise GrammarFileError(f"term {name!r}: expected {{ ... }} body", lineno)
    fields = dict(
        (k, v[1:-1].replace('\\"', '"') if v.startswith('"') else v)
        for k, v in _TERM_KV.findall(rest[1:-1])
    )
    unknown = set(fields) - {"val", "mod", "synrole", "coop"}
    if unknown:
        raise GrammarFileError(f"term {name!r}: unknown keys {sorted(unknown)}", lineno)
    if "mod" not in fields or "synrole" not in fields:
        raise GrammarFileError(f"term {name!r}: mod and synrole are required", lineno)
    try:
        mods = frozenset(Modality(m) for m in re.split(r"[,\s]+", fields["mod"]) if m)
        synrole = SynRole(fields["synrole"])
        coop = CoopType(fields["coop"]) if "coop" in fields else None
    except ValueError as exc:
        raise GrammarFileError(f"term {name!r}: {exc}", lineno) from None
    if not mods:
        raise GrammarFileError(f"term {name!r}: empty modality set", lineno)
    return TerminalDef(
        name=name,
        val=fields.get("val", name.lower()),
        admissible_mods=mods,
        synrole=synrole,
        coop=coop,
    )


def _parse_prod(body: str, lineno: int, term_names: set[str]) -> Production:
    head, _, sem_body = body.partition("{")
    m = re.match(r"\s*([A-Za-z0-9_.-]+)\s*:\s*(.*)", head)
    if not m:
        raise GrammarFileError("prod needs: <Id>: <NT> -> <Sym> ...", lineno)
    pid, rest = m.group(1), m.group(2)
    lhs_text, arrow, rhs_text = rest.partition("->")
    if not arrow:
        raise GrammarFileError(f"prod {pid}: missing '->'", lineno)
    lhs = _read_symbol(lhs_text.strip(), lineno)
    rhs = _read_symbols(rhs_text.strip(), lineno)
    if not rhs:
        raise GrammarFileError(f"empty RHS at line {lineno} (prod {pid})", lineno)

    semantics: list[SemanticFunction] = []
    if sem_body:
        sem_body = sem_body.strip()
        if not sem_body.endswith("}"):
            raise GrammarFileError(f"prod {pid}: unterminated semantics block", lineno)
        occ_syms = (lhs,) + tuple(rhs)
        for clause in sem_body[:-1].split(";"):
            clause = clause.strip()
            if clause:
                semantics.append(_parse_function(clause, occ_syms, lineno, pid))
    return Production(pid, lhs, tuple(rhs), tuple(semantics))


def _parse_function(
    clause: str, occ_syms: tuple[str, ...], lineno: int, pid: str
) -> SemanticFunction:
    lhs_text, eq, expr_text = clause.partition("=")
    if not eq:
        raise GrammarFileError(f"prod {pid}: expected '=' in {clause!r}", lineno)
    occ, attr = _parse_attr_access(lhs_text.strip(), occ_syms, lineno, pid)
    expr = _parse_expr(expr_text.strip(), occ_syms, lineno, pid, ATTR_DOMAINS.get(attr))
    return SemanticFunction((occ, attr), expr)


def _parse_attr_access(
    text: str, occ_syms: tuple[str, ...], lineno: int, pid: str
) -> tuple[int, str]:
    sym, rest = _take_symbol(text, lineno)
    m = re.fullmatch(r"(?:\[(\d+)\])?\.(\w+)", rest.strip())
    if not m:
        raise GrammarFileError(f"prod {pid}: expected <Sym>[k].<attr>, got {text!r}", lineno)
    attr = m.group(2)
    if attr not in ATTR_DOMAINS:
        raise GrammarFileError(f"prod {pid}: unknown attribute name {attr!r}", lineno)
    if m.group(1) is not None:
        occ = int(m.group(1))
        if occ >= len(occ_syms) or occ_syms[occ] != sym:
            raise GrammarFileError(
                f"prod {pid}: occurrence {occ} is not symbol {sym!r}", lineno
            )
        return occ, attr
    positions = [i for i, s in enumerate(occ_syms) if s == sym]
    if not positions:
        raise GrammarFileError(f"prod {pid}: symbol {sym!r} not in production", lineno)
    if len(positions) > 1:
        raise GrammarFileError(
            f"prod {pid}: symbol {sym!r} occurs {len(positions)} times, use [k]", lineno
        )
    return positions[0], attr


def _parse_expr(
    text: str,
    occ_syms: tuple[str, ...],
    lineno: int,
    pid: str,
    target_domain: AttrDomain | None,
) -> Expr:
    parts = _split_concat(text)
    expr = _parse_atom(parts[0], occ_syms, lineno, pid, target_domain)
    for part in parts[1:]:
        expr = Concat(expr, _parse_atom(part, occ_syms, lineno, pid, target_domain))
    return expr


def _split_concat(text: str) -> list[str]:
    parts, depth_quote, cur = [], False, []
    i = 0
    while i < len(text):
        c = text[i]
        if c == '"':
            depth_quote = not depth_quote
        if not depth_quote and text[i : i + 2] == "++":
            parts.append("".join(cur).strip())
            cur = []
            i += 2
            continue
        cur.append(c)
        i += 1
    parts.append("".join(cur).strip())
    return parts


def _parse_atom(
    text: str,
    occ_syms: tuple[str, ...],
    lineno: int,
    pid: str,
    target_domain: AttrDomain | None,
) -> Expr:
    if not text:
        raise GrammarFileError(f"prod {pid}: empty expression", lineno)
    if text.startswith('"'):
        end = _closing_quote(text, lineno)
        # a quote spanning the whole atom is a literal; otherwise it is a
        # quoted symbol name inside an attribute reference
        if not text[end + 1:].strip():
            value = text[1:end].replace('\\"', '"')
            if target_domain is AttrDomain.MODALITY_SET:
                try:
                    mods = frozenset(Modality(m) for m in re.split(r"[,\s]+", value) if m)
                except ValueError as exc:
                    raise GrammarFileError(f"prod {pid}: {exc}", lineno) from None
                return ModLit(mods)
            return Lit(value)
    occ, attr = _parse_attr_access(text, occ_syms, lineno, pid)
    return Ref(occ, attr)


def _closing_quote(text: str, lineno: int) -> int:
    end = text.find('"', 1)
    while end > 0 and text[end - 1] == "\\":
        end = text.find('"', end + 1)
    if end < 0:
        raise GrammarFileError(f"unterminated quote in {text[:30]!r}", lineno)
    return end
