"""Fusing per-modality recognizer streams into one multimodal sentence.

Recognizers emit time-stamped concept tokens. This module merges the streams
into a single time-ordered sentence, collapses redundant cross-modality
repetitions, links deictic words ("this") to co-occurring gestures, and decides
whether a pointing gesture fills a grammar slot itself or merely supplies the
referent for a spoken noun.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .grammar import CoopType, Modality, MultimodalGrammar, SynRole


class TokenStreamError(ValueError):
    """Malformed recognizer record."""


class UnresolvableDeicticError(ValueError):
    """A deictic-linked gesture neither names a terminal nor has a noun to bind."""

    def __init__(self, token_index: int):
        super().__init__(f"unresolvable deictic at token {token_index}")
        self.token_index = token_index


@dataclass(frozen=True)
class MultimodalToken:
    value: str
    modality: Modality
    t_start: int
    t_end: int
    target_id: str | None = None
    source_id: str = ""

    def overlaps(self, other: "MultimodalToken") -> bool:
        return self.t_start <= other.t_end and other.t_start <= self.t_end

    def gap_to(self, other: "MultimodalToken") -> int:
        if self.overlaps(other):
            return 0
        return max(self.t_start - other.t_end, other.t_start - self.t_end)

    def midpoint(self) -> float:
        return (self.t_start + self.t_end) / 2


def token_from_wire(data: dict) -> MultimodalToken:
    """Build a token from its JSON wire form."""
    try:
        return MultimodalToken(
            value=data["value"],
            modality=Modality(data["modality"]),
            t_start=int(data["t_start"]),
            t_end=int(data["t_end"]),
            target_id=data.get("target_id"),
            source_id=data.get("source_id", ""),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise TokenStreamError(f"malformed token record: {exc}") from exc


def token_to_wire(tok: MultimodalToken) -> dict:
    return {
        "value": tok.value,
        "modality": tok.modality.value,
        "t_start": tok.t_start,
        "t_end": tok.t_end,
        "target_id": tok.target_id,
        "source_id": tok.source_id,
    }


@dataclass(frozen=True)
class MultimodalSentence:
    """Time-ordered multimodal token sequence with cooperation annotations.

    ``coop_links`` holds complementary pairs (redundant pairs are collapsed
    and only noted); ``referents`` maps token indices to the on-screen object
    a gesture pointed at.
    """

    tokens: tuple[MultimodalToken, ...]
    coop_links: tuple[tuple[int, int, CoopType], ...] = ()
    referents: dict[int, str] = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def values(self) -> tuple[str, ...]:
        return tuple(t.value for t in self.tokens)


@dataclass(frozen=True)
class FusionConfig:
    coop_window_ms: int = 1000
    tie_break_order: tuple[Modality, ...] = (
        Modality.SPEECH,
        Modality.GESTURE,
        Modality.HANDWRITING,
        Modality.SKETCH,
    )

    def __post_init__(self) -> None:
        if self.coop_window_ms < 0:
            raise ValueError("coop_window_ms must be >= 0")

    def modality_rank(self, m: Modality) -> int:
        return self.tie_break_order.index(m)


def ingest_stream(
    raw: list[MultimodalToken | dict], g: MultimodalGrammar
) -> list[MultimodalToken]:
    """Validate one recognizer stream and merge multiword terminals.

    Adjacent same-modality records are merged, longest match first, whenever
    their space-joined values equal a multiword terminal of ``g`` admissible
    for that modality ("turn" + "on" -> "turn on").
    """
    tokens: list[MultimodalToken] = []
    for i, rec in enumerate(raw):
        tok = rec if isinstance(rec, MultimodalToken) else token_from_wire(rec)
        if tok.t_start > tok.t_end:
            raise TokenStreamError(f"record {i}: t_start > t_end")
        if tok.t_start < 0:
            raise TokenStreamError(f"record {i}: negative t_start")
        if not tok.value:
            raise TokenStreamError(f"record {i}: empty value")
        if tok.modality is Modality.SPEECH and tok.target_id is not None:
            raise TokenStreamError(f"record {i}: speech tokens never carry target_id")
        tokens.append(tok)

    multiword: dict[Modality, list[tuple[str, ...]]] = {}
    for t in g.terminals:
        words = tuple(t.val.casefold().split())
        if len(words) > 1:
            for m in t.admissible_mods:
                multiword.setdefault(m, []).append(words)
    for seqs in multiword.values():
        seqs.sort(key=len, reverse=True)

    out: list[MultimodalToken] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        merged = None
        for words in multiword.get(tok.modality, ()):
            k = len(words)
            window = tokens[i : i + k]
            if len(window) == k and all(
                w.modality is tok.modality for w in window
            ) and tuple(w.value.casefold() for w in window) == words:
                merged = MultimodalToken(
                    value=" ".join(w.value for w in window),
                    modality=tok.modality,
                    t_start=min(w.t_start for w in window),
                    t_end=max(w.t_end for w in window),
                    target_id=tok.target_id,
                    source_id=tok.source_id,
                )
                i += k
                break
        if merged is None:
            out.append(tok)
            i += 1
        else:
            out.append(merged)
    return out


def merge_streams(
    streams: list[list[MultimodalToken]], cfg: FusionConfig | None = None
) -> MultimodalSentence:
    """Union the streams into one sentence ordered by start time.

    Ties break by the configured modality order, then by source id, so equal
    timestamps always produce the same sentence.
    """
    cfg = cfg or FusionConfig()
    merged = [tok for stream in streams for tok in stream]
    merged.sort(key=lambda t: (t.t_start, cfg.modality_rank(t.modality), t.source_id))
    return MultimodalSentence(tokens=tuple(merged))


def detect_cooperation(
    s: MultimodalSentence,
    cfg: FusionConfig | None = None,
    deictic_values: frozenset[str] = frozenset({"this"}),
) -> MultimodalSentence:
    """Annotate redundant and complementary modality cooperation.

    Equal-valued tokens of different modalities inside the window are
    redundant and collapse to a single token; a deictic word and a nearby
    gesture with a different value get a complementary link for bind_deictic
    to resolve. Idempotent.
    """
    cfg = cfg or FusionConfig()
    tokens = list(s.tokens)
    # carry referents by token identity across collapses
    targets: dict[int, str] = {id(tokens[i]): tgt for i, tgt in s.referents.items()}
    notes = list(s.notes)

    collapsed = True
    while collapsed:
        collapsed = False
        for i in range(len(tokens)):
            for j in range(i + 1, len(tokens)):
                a, b = tokens[i], tokens[j]
                if (
                    a.modality is not b.modality
                    and a.value.casefold() == b.value.casefold()
                    and a.gap_to(b) <= cfg.coop_window_ms
                ):
                    keep = MultimodalToken(
                        value=a.value,
                        modality=a.modality,
                        t_start=min(a.t_start, b.t_start),
                        t_end=max(a.t_end, b.t_end),
                        target_id=a.target_id,
                        source_id=a.source_id,
                    )
                    for old in (a, b):
                        if id(old) in targets:
                            targets[id(keep)] = targets.pop(id(old))
                    if b.target_id is not None:
                        targets[id(keep)] = b.target_id
                    notes.append(
                        f"redundant: {a.value!r} by {a.modality.value}+{b.modality.value}"
                    )
                    tokens[i] = keep
                    del tokens[j]
                    collapsed = True
                    break
            if collapsed:
                break

    deictic_fold = {v.casefold() for v in deictic_values}
    links: list[tuple[int, int, CoopType]] = []
    taken_gestures: set[int] = set()
    for di, d in enumerate(tokens):
        if d.modality is Modality.GESTURE or d.value.casefold() not in deictic_fold:
            continue
        best = None
        for gi, gt in enumerate(tokens):
            if (
                gi in taken_gestures
                or gt.modality is not Modality.GESTURE
                or gt.value.casefold() == d.value.casefold()
                or d.gap_to(gt) > cfg.coop_window_ms
            ):
                continue
            dist = abs(gt.midpoint() - d.midpoint())
            if best is None or dist < best[0]:
                best = (dist, gi)
        if best is not None:
            gi = best[1]
            taken_gestures.add(gi)
            links.append((min(di, gi), max(di, gi), CoopType.COMPLEMENTARY))

    referents = {
        i: targets[id(tok)] for i, tok in enumerate(tokens) if id(tok) in targets
    }
    return MultimodalSentence(
        tokens=tuple(tokens),
        coop_links=tuple(sorted(links)),
        referents=referents,
        notes=tuple(notes),
    )


def bind_deictic(
    s: MultimodalSentence,
    g: MultimodalGrammar,
    cfg: FusionConfig | None = None,
) -> MultimodalSentence:
    """Resolve gesture tokens against the grammar.

    A gesture linked to a deictic either stays in the sentence as a terminal
    token (it names a grammar concept and no spoken noun follows) or is
    dropped and its target recorded as the referent of the noun after the
    deictic. Unlinked gestures that name no terminal but carry a target are
    dropped too, their target attached to the nearest surviving token.
    """
    cfg = cfg or FusionConfig()
    tokens = list(s.tokens)
    removed: set[int] = set()
    # referent targets keyed by the index the token has *now*; reindexed at the end
    pending: dict[int, str] = dict(s.referents)
    linked_gestures = set()

    for a, b, coop in s.coop_links:
        if coop is not CoopType.COMPLEMENTARY:
            continue
        di, gi = (a, b) if tokens[b].modality is Modality.GESTURE else (b, a)
        if tokens[gi].modality is not Modality.GESTURE:
            continue
        linked_gestures.add(gi)
        gt = tokens[gi]
        matches = g.matching_terminals(gt.value, Modality.GESTURE)
        noun_idx = _following_noun(tokens, di, gi, g, cfg)
        if matches and noun_idx is None:
            # the gesture itself fills the noun slot (S2-style)
            if gt.target_id is not None:
                pending[gi] = gt.target_id
        elif noun_idx is not None:
            removed.add(gi)
            if gt.target_id is not None:
                pending[noun_idx] = gt.target_id
        else:
            raise UnresolvableDeicticError(gi)

    for gi, gt in enumerate(tokens):
        if (
            gi in linked_gestures
            or gi in removed
            or gt.modality is not Modality.GESTURE
        ):
            continue
        if g.matching_terminals(gt.value, Modality.GESTURE):
            continue  # a real gesture word; leave it in the sentence
        if gt.target_id is None:
            continue  # unknown token, let the learner see it
        survivors = [i for i in range(len(tokens)) if i != gi and i not in removed]
        if not survivors:
            continue  # gesture-only utterance: keep it as the sentence
        nearest = min(
            survivors,
            key=lambda i: (abs(tokens[i].midpoint() - gt.midpoint()), i < gi),
        )
        removed.add(gi)
        pending[nearest] = gt.target_id

    new_index = {}
    kept: list[MultimodalToken] = []
    for i, tok in enumerate(tokens):
        if i not in removed:
            new_index[i] = len(kept)
            kept.append(tok)
    referents = {new_index[i]: t for i, t in pending.items() if i in new_index}
    links = tuple(
        (min(new_index[a], new_index[b]), max(new_index[a], new_index[b]), c)
        for a, b, c in s.coop_links
        if a in new_index and b in new_index
    )
    return MultimodalSentence(
        tokens=tuple(kept), coop_links=links, referents=referents, notes=s.notes
    )


def _following_noun(
    tokens: list[MultimodalToken],
    deictic_idx: int,
    gesture_idx: int,
    g: MultimodalGrammar,
    cfg: FusionConfig,
) -> int | None:
    """First token after the deictic that is, or could become, a noun.

    Known tokens qualify by matching a noun-role terminal; unknown words also
    qualify so that sentences headed for the learner keep their referent.
    """
    d = tokens[deictic_idx]
    for i in range(deictic_idx + 1, len(tokens)):
        if i == gesture_idx:
            continue
        tok = tokens[i]
        if d.gap_to(tok) > cfg.coop_window_ms:
            break
        matches = g.matching_terminals(tok.value, tok.modality)
        if not matches or any(t.synrole is SynRole.NOUN for t in matches):
            return i
    return None
