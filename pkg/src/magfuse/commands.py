"""Mapping attributed parse trees to driver-assistance command frames.

A frame is the action the vehicle backend executes: a verb, an optional
object, the referent a gesture pointed at, and scalar parameters (numbers
spoken in the sentence). Taught sentences register a frame template keyed by
the normalized sentence pattern; everything else derives structurally from
the leaf roles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .grammar import MultimodalGrammar, SynRole, TerminalDef
from .parser import ParseTree
from .tokens import MultimodalSentence

NUM_SLOT = "<num>"


class UninterpretableError(ValueError):
    pass


@dataclass(frozen=True)
class CommandFrame:
    action: str
    object: str | None = None
    target_id: str | None = None
    params: dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.action:
            raise ValueError("frame action must be non-empty")


def frame_to_wire(frame: CommandFrame) -> dict:
    return {
        "action": frame.action,
        "object": frame.object,
        "target_id": frame.target_id,
        "params": dict(frame.params),
    }


def frame_from_wire(data: dict) -> CommandFrame:
    return CommandFrame(
        action=data["action"],
        object=data.get("object"),
        target_id=data.get("target_id"),
        params=dict(data.get("params") or {}),
    )


def normalize_values(values: tuple[str, ...] | list[str]) -> str:
    """Space-joined lowercase values with all-digit values abstracted."""
    return " ".join(NUM_SLOT if v.isdigit() else v.casefold() for v in values)


def normalize_pattern(tree: ParseTree, s: MultimodalSentence) -> str:
    """Sentence pattern: frontier values in order, numerals as ``<num>``."""
    return normalize_values([str(leaf.attrs["val"]) for leaf in tree.leaves()])


@dataclass(frozen=True)
class MeaningRegistry:
    """Pattern -> frame-template map for taught sentence meanings.

    Template params may hold the ``<num>`` marker, bound at interpretation
    time from the numerals actually spoken.
    """

    entries: dict[str, CommandFrame] = field(default_factory=dict)

    def lookup(self, pattern: str) -> CommandFrame | None:
        return self.entries.get(pattern)

    def register(self, pattern: str, template: CommandFrame) -> "MeaningRegistry":
        merged = dict(self.entries)
        merged[pattern] = template
        return MeaningRegistry(merged)

    def register_sentence(
        self, s: MultimodalSentence, meaning: CommandFrame
    ) -> "MeaningRegistry":
        """Register a meaning under the sentence's pattern, abstracting any
        param value that repeats a numeral of the sentence into a slot."""
        numerals = {v for v in s.values() if v.isdigit()}
        params = {
            k: (NUM_SLOT if str(v) in numerals else v)
            for k, v in meaning.params.items()
        }
        template = CommandFrame(
            action=meaning.action,
            object=meaning.object,
            target_id=meaning.target_id,
            params=params,
        )
        return self.register(normalize_values(s.values()), template)


def interpret(
    tree: ParseTree, s: MultimodalSentence, reg: MeaningRegistry
) -> CommandFrame:
    """Turn an attributed tree into a command frame.

    Taught patterns win; otherwise the frame is derived from leaf roles
    (first verb is the action, last non-numeric noun the object).
    """
    leaves = tree.leaves()
    vals = [str(leaf.attrs["val"]) for leaf in leaves]
    numerals = [int(v) for v in vals if v.isdigit()]
    pattern = normalize_values(vals)

    template = reg.lookup(pattern)
    if template is not None:
        return _instantiate(template, numerals, _pick_referent(s, None))

    roles = [leaf.attrs.get("synrole") for leaf in leaves]
    frame = _structural_frame(list(zip(vals, roles)))
    obj_idx = None
    if frame.object is not None:
        obj_idx = max(i for i, v in enumerate(vals) if v == frame.object)
    target = _pick_referent(s, obj_idx)
    return CommandFrame(
        action=frame.action, object=frame.object, target_id=target, params=frame.params
    )


def _structural_frame(leaf_info: list[tuple[str, SynRole | None]]) -> CommandFrame:
    verbs = [v for v, role in leaf_info if role is SynRole.VERB]
    nouns = [v for v, role in leaf_info if role is SynRole.NOUN and not v.isdigit()]
    numerals = [int(v) for v, _ in leaf_info if v.isdigit()]
    params = {"value": numerals[0]} if numerals else {}
    if verbs:
        return CommandFrame(
            action=verbs[0], object=nouns[-1] if nouns else None, params=params
        )
    if len(leaf_info) == 1 and nouns:
        # noun-only utterances ("Help") act as their own command
        return CommandFrame(action=nouns[0], params=params)
    raise UninterpretableError(
        "uninterpretable: no verb role, no registered meaning, not a single noun"
    )


def _instantiate(
    template: CommandFrame, numerals: list[int], fallback_target: str | None
) -> CommandFrame:
    nums = iter(numerals)
    params = {
        k: (next(nums, v) if v == NUM_SLOT else v) for k, v in template.params.items()
    }
    return CommandFrame(
        action=template.action,
        object=template.object,
        target_id=template.target_id or fallback_target,
        params=params,
    )


def _pick_referent(s: MultimodalSentence, object_index: int | None) -> str | None:
    if object_index is not None and object_index in s.referents:
        return s.referents[object_index]
    if len(s.referents) == 1:
        return next(iter(s.referents.values()))
    return None


def enumerate_language(
    g: MultimodalGrammar, max_len: int = 6
) -> list[tuple[TerminalDef, ...]]:
    """All terminal sequences derivable from the start symbol, up to max_len.

    Leftmost expansion of sentential forms with length pruning; safe for any
    grammar without epsilon rules (forms only grow).
    """
    terminals = {t.name: t for t in g.terminals}
    by_lhs: dict[str, list[tuple[str, ...]]] = {}
    for p in g.productions:
        by_lhs.setdefault(p.lhs, []).append(p.rhs)

    results: list[tuple[str, ...]] = []
    seen: set[tuple[str, ...]] = set()
    stack: list[tuple[str, ...]] = [(g.start,)]
    while stack:
        form = stack.pop()
        if form in seen or len(form) > max_len:
            continue
        seen.add(form)
        nt_pos = next((i for i, sym in enumerate(form) if sym not in terminals), None)
        if nt_pos is None:
            results.append(form)
            continue
        for rhs in by_lhs.get(form[nt_pos], ()):
            stack.append(form[:nt_pos] + rhs + form[nt_pos + 1:])
    results.sort()
    return [tuple(terminals[name] for name in seq) for seq in results]


def seed_meanings(g: MultimodalGrammar | None = None) -> MeaningRegistry:
    """Registry covering the whole (finite) seed language with its structural
    frames, so taught meanings and built-in commands go through one lookup."""
    from .grammar import seed_grammar

    g = g or seed_grammar()
    entries: dict[str, CommandFrame] = {}
    for sentence in enumerate_language(g, max_len=4):
        vals = [t.val for t in sentence]
        pattern = normalize_values(vals)
        try:
            entries[pattern] = _structural_frame([(t.val, t.synrole) for t in sentence])
        except UninterpretableError:
            continue
    return MeaningRegistry(entries)
