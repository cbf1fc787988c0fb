"""Independent derivation oracle for grammar language checks.

Enumerates exactly the terminal strings a rule set derives, by exhaustive
top-down leftmost expansion of sentential forms with minimum-yield pruning.
Deliberately shares nothing with the chart parser or the binarizer it checks.
"""

from __future__ import annotations

from magfuse import BinarizedGrammar, MultimodalGrammar

INF = 10**9


def derivable_strings(
    rules: list[tuple[str, tuple[str, ...]]],
    start: str,
    terminals: set[str],
    max_len: int,
) -> set[tuple[str, ...]]:
    by_lhs: dict[str, list[tuple[str, ...]]] = {}
    nonterminals: set[str] = set()
    for lhs, rhs in rules:
        by_lhs.setdefault(lhs, []).append(rhs)
        nonterminals.add(lhs)
        nonterminals.update(s for s in rhs if s not in terminals)

    min_yield = {t: 1 for t in terminals}
    min_yield.update({nt: INF for nt in nonterminals})
    changed = True
    while changed:
        changed = False
        for lhs, rhs in rules:
            total = 0
            for s in rhs:
                total += min_yield.get(s, INF)
                if total >= INF:
                    total = INF
                    break
            if total < min_yield[lhs]:
                min_yield[lhs] = total
                changed = True

    def weight(form: tuple[str, ...]) -> int:
        total = 0
        for s in form:
            total += min_yield.get(s, INF)
            if total > max_len:
                return INF
        return total

    results: set[tuple[str, ...]] = set()
    seen: set[tuple[str, ...]] = set()
    stack: list[tuple[str, ...]] = []
    if start in min_yield and weight((start,)) <= max_len:
        stack.append((start,))
    while stack:
        form = stack.pop()
        if form in seen:
            continue
        seen.add(form)
        nt_pos = next((i for i, s in enumerate(form) if s in nonterminals), None)
        if nt_pos is None:
            results.add(form)
            continue
        for rhs in by_lhs.get(form[nt_pos], ()):
            new = form[:nt_pos] + rhs + form[nt_pos + 1 :]
            if weight(new) <= max_len:
                stack.append(new)
    return results


def grammar_strings(g: MultimodalGrammar, max_len: int) -> set[tuple[str, ...]]:
    return derivable_strings(
        [(p.lhs, p.rhs) for p in g.productions],
        g.start,
        set(g.terminal_names),
        max_len,
    )


def binarized_strings(bg: BinarizedGrammar, max_len: int) -> set[tuple[str, ...]]:
    return derivable_strings(
        [(r.lhs, r.rhs) for r in bg.rules],
        bg.source.start,
        set(bg.source.terminal_names),
        max_len,
    )
