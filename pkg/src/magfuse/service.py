"""The long-running fusion service: pipeline orchestration and teach sessions.

Many concurrent parse requests read an immutable grammar snapshot; grammar
replacement (teach commits and PUT /grammar) goes through a single writer
lock and an atomic file write, so no request ever observes a half-updated
grammar or a registry inconsistent with it.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import pydantic as _pydantic
from fastapi import Request

from .commands import (
    CommandFrame,
    MeaningRegistry,
    frame_from_wire,
    frame_to_wire,
    interpret,
    normalize_values,
    seed_meanings,
)
from .grammar import MultimodalGrammar, SynRole, seed_grammar, validate_grammar
from .learner import (
    AlreadyParseableError,
    MissingRolesError,
    RuleDelta,
    StaleDeltaError,
    apply_delta,
    propose_delta,
    render_delta,
)
from .magfile import GrammarFileError, load_grammar, save_grammar
from .parser import NotParseable, ParseTree, parse, tree_to_wire
from .tokens import (
    FusionConfig,
    MultimodalSentence,
    MultimodalToken,
    bind_deictic,
    detect_cooperation,
    ingest_stream,
    merge_streams,
)


class SessionState(str, Enum):
    AWAITING_ROLES = "awaiting_roles"
    AWAITING_MEANING = "awaiting_meaning"
    AWAITING_CONFIRM = "awaiting_confirm"
    COMMITTED = "committed"
    REJECTED = "rejected"
    EXPIRED = "expired"


_OPEN_STATES = {
    SessionState.AWAITING_ROLES,
    SessionState.AWAITING_MEANING,
    SessionState.AWAITING_CONFIRM,
}


class UnknownSessionError(KeyError):
    pass


class WrongStateError(ValueError):
    def __init__(self, expected: SessionState, actual: SessionState):
        super().__init__(f"session is {actual.value}, expected {expected.value}")
        self.expected = expected
        self.actual = actual


@dataclass
class TeachSession:
    id: str
    state: SessionState
    sentence: MultimodalSentence
    unknowns: tuple[str, ...]
    created_at: float
    expires_at: float
    roles: dict[str, SynRole] | None = None
    meaning: CommandFrame | None = None
    pending_delta: RuleDelta | None = None
    grammar_fingerprint: str | None = None

    def snapshot(self) -> dict:
        out = {
            "session_id": self.id,
            "state": self.state.value,
            "unknowns": list(self.unknowns),
        }
        if self.pending_delta is not None:
            out["delta"] = render_delta(self.pending_delta)
        return out


def run_pipeline(
    g: MultimodalGrammar,
    streams: list[list[MultimodalToken | dict]],
    cfg: FusionConfig | None = None,
) -> tuple[MultimodalSentence, ParseTree | NotParseable]:
    """ingest -> merge -> cooperation -> deictic binding -> parse."""
    cfg = cfg or FusionConfig()
    ingested = [ingest_stream(stream, g) for stream in streams]
    sentence = merge_streams(ingested, cfg)
    sentence = detect_cooperation(sentence, cfg, g.deictic_values() or frozenset({"this"}))
    sentence = bind_deictic(sentence, g, cfg)
    return sentence, parse(g, sentence)


class Engine:
    """Mutable service state holding immutable grammar/registry snapshots."""

    def __init__(
        self,
        grammar_path: str | os.PathLike | None = None,
        session_ttl_s: float = 600.0,
        fusion: FusionConfig | None = None,
        clock=time.time,
    ) -> None:
        self._lock = threading.Lock()
        self._clock = clock
        self._ttl = session_ttl_s
        self.fusion = fusion or FusionConfig()
        self.grammar_path = Path(grammar_path) if grammar_path else None
        self.sessions: dict[str, TeachSession] = {}

        if self.grammar_path and self.grammar_path.exists():
            self.grammar = load_grammar(self.grammar_path.read_text("utf-8"))
        else:
            self.grammar = seed_grammar()
        self.registry = seed_meanings()
        for pattern, wire in self._load_meanings().items():
            self.registry = self.registry.register(pattern, frame_from_wire(wire))
        self.history: list[dict] = self._load_history()

    # --- persistence ------------------------------------------------------

    @property
    def meanings_path(self) -> Path | None:
        if self.grammar_path is None:
            return None
        return self.grammar_path.with_suffix(".meanings.json")

    @property
    def history_path(self) -> Path | None:
        if self.grammar_path is None:
            return None
        return self.grammar_path.with_suffix(".history.jsonl")

    def _load_meanings(self) -> dict:
        if self.meanings_path and self.meanings_path.exists():
            return json.loads(self.meanings_path.read_text("utf-8"))
        return {}

    def _load_history(self) -> list[dict]:
        if self.history_path and self.history_path.exists():
            return [
                json.loads(line)
                for line in self.history_path.read_text("utf-8").splitlines()
                if line.strip()
            ]
        return []

    def _persist(
        self, grammar: MultimodalGrammar, registry: MeaningRegistry,
        history_entry: dict | None,
    ) -> None:
        if self.grammar_path is None:
            return
        _atomic_write(self.grammar_path, save_grammar(grammar))
        if self.meanings_path:
            _atomic_write(
                self.meanings_path,
                json.dumps(_taught_meanings(registry), indent=2, sort_keys=True),
            )
        if history_entry is not None and self.history_path:
            with self.history_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(history_entry) + "\n")

    # --- parse ---------------------------------------------------------------

    def parse_streams(self, streams: list[list[dict]]) -> dict:
        grammar = self.grammar
        registry = self.registry
        sentence, result = run_pipeline(grammar, streams, self.fusion)
        if isinstance(result, ParseTree):
            frame = interpret(result, sentence, registry)
            return {
                "status": "parsed",
                "tree": tree_to_wire(result),
                "frame": frame_to_wire(frame),
            }
        session = self._open_session(sentence, result)
        return {
            "status": "not_parseable",
            "spans": [
                {"start": seg.start, "end": seg.end, "symbol": seg.symbol, "value": seg.value}
                for seg in result.spans
            ],
            **session.snapshot(),
        }

    def _open_session(self, sentence: MultimodalSentence, report: NotParseable) -> TeachSession:
        now = self._clock()
        unknowns: list[str] = []
        for _, value in report.unknown_tokens:
            if value not in unknowns:
                unknowns.append(value)
        session = TeachSession(
            id=uuid.uuid4().hex[:12],
            state=SessionState.AWAITING_ROLES,
            sentence=sentence,
            unknowns=tuple(unknowns),
            created_at=now,
            expires_at=now + self._ttl,
        )
        self.sessions[session.id] = session
        return session

    # --- teach dialog -----------------------------------------------------------

    def _session(self, sid: str, expected: SessionState) -> TeachSession:
        session = self.sessions.get(sid)
        if session is None:
            raise UnknownSessionError(sid)
        if session.state in _OPEN_STATES and self._clock() > session.expires_at:
            session.state = SessionState.EXPIRED
            session.pending_delta = None
        if session.state is not expected:
            raise WrongStateError(expected, session.state)
        return session

    def teach_roles(self, sid: str, roles: dict[str, str]) -> dict:
        session = self._session(sid, SessionState.AWAITING_ROLES)
        parsed = {k: SynRole(v) for k, v in roles.items()}
        missing = [u for u in session.unknowns if u.casefold() not in
                   {k.casefold() for k in parsed}]
        if missing:
            raise MissingRolesError(missing)
        session.roles = parsed
        session.state = SessionState.AWAITING_MEANING
        return session.snapshot()

    def teach_meaning(self, sid: str, frame_wire: dict) -> dict:
        session = self._session(sid, SessionState.AWAITING_MEANING)
        meaning = frame_from_wire(frame_wire)
        grammar = self.grammar
        try:
            delta = propose_delta(grammar, session.sentence, meaning, session.roles or {})
        except AlreadyParseableError:
            session.state = SessionState.EXPIRED
            raise
        session.meaning = meaning
        session.pending_delta = delta
        session.grammar_fingerprint = delta.base_fingerprint
        session.state = SessionState.AWAITING_CONFIRM
        return session.snapshot()

    def teach_confirm(self, sid: str, verdict: str) -> dict:
        session = self._session(sid, SessionState.AWAITING_CONFIRM)
        if verdict not in ("confirm", "reject"):
            raise ValueError(f"verdict must be confirm or reject, got {verdict!r}")
        if verdict == "reject":
            session.pending_delta = None
            session.state = SessionState.REJECTED
            return session.snapshot()

        delta = session.pending_delta
        assert delta is not None
        with self._lock:
            try:
                grammar, registry = apply_delta(self.grammar, delta, True, self.registry)
            except StaleDeltaError:
                session.pending_delta = None
                session.state = SessionState.EXPIRED
                raise
            entry = {
                "timestamp": self._clock(),
                "session_id": session.id,
                "pattern": normalize_values(delta.sentence.values()),
                "meaning": frame_to_wire(delta.meaning),
                "rules": [p.pid for p in delta.new_productions],
                "mag_fragment": render_delta(delta),
            }
            # persist first, swap after: a failed write leaves the old snapshot
            self._persist(grammar, registry, entry)
            self.grammar, self.registry = grammar, registry
            self.history.append(entry)
        session.pending_delta = None
        session.state = SessionState.COMMITTED
        return session.snapshot()

    # --- grammar management --------------------------------------------------------

    def grammar_text(self) -> str:
        return save_grammar(self.grammar)

    def put_grammar(self, text: str) -> dict:
        g = load_grammar(text)
        report = validate_grammar(g)
        if not report.ok:
            raise GrammarFileError("; ".join(report.violations), 0)
        with self._lock:
            self._persist(g, self.registry, None)
            self.grammar = g
        return {"fingerprint": g.fingerprint(), "productions": len(g.productions)}


def _taught_meanings(registry: MeaningRegistry) -> dict:
    """Registry entries beyond the built-in seed; the only part persisted."""
    seed = seed_meanings().entries
    return {
        pattern: frame_to_wire(frame)
        for pattern, frame in registry.entries.items()
        if seed.get(pattern) != frame
    }


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class ParseRequest(_pydantic.BaseModel):
    streams: list[list[dict]]


class RolesRequest(_pydantic.BaseModel):
    roles: dict[str, str]


class MeaningRequest(_pydantic.BaseModel):
    action: str
    object: str | None = None
    target_id: str | None = None
    params: dict = {}


class ConfirmRequest(_pydantic.BaseModel):
    verdict: str


def create_app(engine: Engine):
    """FastAPI application over an Engine."""
    from fastapi import FastAPI
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse, PlainTextResponse

    from .parser import EmptyInputError
    from .tokens import TokenStreamError, UnresolvableDeicticError

    app = FastAPI(title="magfuse", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _error(status: int, message: str, **extra):
        return JSONResponse(status_code=status, content={"error": message, **extra})

    @app.exception_handler(TokenStreamError)
    async def _token_error(_req: Request, exc: TokenStreamError):
        return _error(400, str(exc))

    @app.exception_handler(EmptyInputError)
    async def _empty_error(_req: Request, exc: EmptyInputError):
        return _error(400, str(exc))

    @app.exception_handler(UnresolvableDeicticError)
    async def _deictic_error(_req: Request, exc: UnresolvableDeicticError):
        return _error(422, "unresolvable deictic", token_index=exc.token_index)

    @app.exception_handler(UnknownSessionError)
    async def _session_error(_req: Request, exc: UnknownSessionError):
        return _error(404, f"unknown session {exc.args[0]!r}")

    @app.exception_handler(WrongStateError)
    async def _state_error(_req: Request, exc: WrongStateError):
        return _error(409, str(exc), expected=exc.expected.value, actual=exc.actual.value)

    @app.exception_handler(StaleDeltaError)
    async def _stale_error(_req: Request, exc: StaleDeltaError):
        return _error(409, str(exc))

    @app.exception_handler(AlreadyParseableError)
    async def _parseable_error(_req: Request, exc: AlreadyParseableError):
        return _error(409, str(exc))

    @app.exception_handler(MissingRolesError)
    async def _roles_error(_req: Request, exc: MissingRolesError):
        return _error(422, str(exc), missing=list(exc.missing))

    @app.exception_handler(GrammarFileError)
    async def _grammar_error(_req: Request, exc: GrammarFileError):
        return _error(422, str(exc))

    @app.exception_handler(ValueError)
    async def _value_error(_req: Request, exc: ValueError):
        return _error(422, str(exc))

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "grammar_fingerprint": engine.grammar.fingerprint(),
            "productions": len(engine.grammar.productions),
        }

    @app.post("/parse")
    def parse_endpoint(req: ParseRequest):
        return engine.parse_streams(req.streams)

    @app.post("/teach/{sid}/roles")
    def teach_roles(sid: str, req: RolesRequest):
        return engine.teach_roles(sid, req.roles)

    @app.post("/teach/{sid}/meaning")
    def teach_meaning(sid: str, req: MeaningRequest):
        return engine.teach_meaning(sid, req.model_dump())

    @app.post("/teach/{sid}/confirm")
    def teach_confirm(sid: str, req: ConfirmRequest):
        return engine.teach_confirm(sid, req.verdict)

    @app.get("/grammar")
    def get_grammar():
        return PlainTextResponse(engine.grammar_text())

    @app.put("/grammar")
    async def put_grammar(request: Request):
        text = (await request.body()).decode("utf-8")
        return engine.put_grammar(text)

    @app.get("/grammar/history")
    def get_history():
        return {"entries": engine.history}

    return app
