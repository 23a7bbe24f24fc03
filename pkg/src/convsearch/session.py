"""Live sessions: a human partner converses with the decoding engine.

Each session owns a configuration (model, partner approximation, search
knobs), the growing conversation, and one search trace per engine turn. The
engine side always opens, so after every mutation the conversation ends with
an engine utterance and it is the partner's turn.

Persistence is an append-only JSONL event log per session, fsynced before any
mutation returns; replaying the log reconstructs the session exactly.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .errors import IngestionError
from .multiturn import (
    ALGORITHMS,
    MultiTurnParams,
    PartnerKind,
    SearchTrace,
    make_partner,
    multi_turn_search,
    trace_from_dict,
    trace_to_dict,
)
from .registry import ModelRegistry
from .search import ScoredUtterance
from .types import Context, Conversation, SpeakerRole, Utterance, Vocabulary


class TurnConflictError(Exception):
    """A partner utterance arrived when it was not the partner's turn."""


_CONFIG_ALIASES = {"K": "width", "L": "steps", "T": "max_tokens"}


@dataclass(frozen=True)
class SessionConfig:
    """Engine configuration for one session; context lines are raw text."""

    model: str
    partner: str = "egocentric"
    algorithm: str = "beam"
    width: int = 10
    steps: int = 0
    max_tokens: int = 20
    iterations: int = 4
    similarity_threshold: int = 3
    self_context: tuple[str, ...] = ()
    partner_context: tuple[str, ...] = ()
    mindless_model: str | None = None
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "SessionConfig":
        known = {f.name for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, value in doc.items():
            name = _CONFIG_ALIASES.get(key, key)
            if name not in known:
                raise ValueError(f"unknown config field {key!r}")
            if name in ("self_context", "partner_context"):
                value = tuple(value)
            if name in ("partner", "algorithm") and isinstance(value, str):
                value = value.lower()
            kwargs[name] = value
        if "model" not in kwargs:
            raise ValueError("config requires a 'model' id")
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "partner": self.partner,
            "algorithm": self.algorithm,
            "width": self.width,
            "steps": self.steps,
            "max_tokens": self.max_tokens,
            "iterations": self.iterations,
            "similarity_threshold": self.similarity_threshold,
            "self_context": list(self.self_context),
            "partner_context": list(self.partner_context),
            "mindless_model": self.mindless_model,
            "seed": self.seed,
        }

    def multi_turn_params(self) -> MultiTurnParams:
        return MultiTurnParams(
            width=self.width,
            steps=self.steps,
            max_tokens=self.max_tokens,
            iterations=self.iterations,
            similarity_threshold=self.similarity_threshold,
        )


class Engine:
    """A session configuration resolved against the model registry."""

    def __init__(self, config: SessionConfig, registry: ModelRegistry):
        self.config = config
        self.params = config.multi_turn_params()  # ValueError on bad params
        if config.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {config.algorithm!r} (expected one of {ALGORITHMS})")
        self.kind = PartnerKind(config.partner)
        self.model = registry.get(config.model)  # KeyError on unknown id
        vocab = self.model.vocab
        self.self_context = Context.from_lines(config.self_context, vocab, SpeakerRole.SELF)
        self.partner_context = Context.from_lines(config.partner_context, vocab, SpeakerRole.PARTNER)
        mindless = registry.get(config.mindless_model) if config.mindless_model else None
        self.partner = make_partner(self.kind, self.model, mindless, self.self_context, self.partner_context)

    @property
    def vocab(self) -> Vocabulary:
        return self.model.vocab

    def empty_conversation(self) -> Conversation:
        return Conversation.empty(self.self_context, self.partner_context)

    def encode_partner_text(self, text: str) -> tuple[int, ...]:
        """Whitespace-tokenize, reporting every out-of-vocabulary token at once."""
        words = text.split()
        if not words:
            raise IngestionError("utterance text is empty")
        unknown = [w for w in words if w not in self.vocab.tokens]
        if unknown:
            raise IngestionError(f"tokens not in vocabulary: {', '.join(sorted(set(unknown)))}")
        return tuple(self.vocab.id_of(w) for w in words)

    def partner_utterance(self, text: str) -> Utterance:
        tokens = list(self.encode_partner_text(text))
        if self.vocab.eos_id in tokens[:-1]:
            raise IngestionError("end-of-utterance token may only appear last")
        if tokens[-1] != self.vocab.eos_id:
            tokens.append(self.vocab.eos_id)
        return Utterance(SpeakerRole.PARTNER, tuple(tokens), truncated=False)

    def reply(self, conversation: Conversation) -> tuple[ScoredUtterance, SearchTrace]:
        return multi_turn_search(
            self.model,
            self.partner,
            conversation,
            self.self_context,
            self.params,
            self.config.algorithm,
            partner_kind=self.kind.value,
        )


@dataclass
class Session:
    id: str
    config: SessionConfig
    conversation: Conversation
    traces: list[SearchTrace] = field(default_factory=list)
    created_at: str = ""
    updated_at: str = ""

    def to_doc(self, vocab: Vocabulary) -> dict[str, Any]:
        return {
            "id": self.id,
            "config": self.config.to_dict(),
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "next_speaker": self.conversation.next_speaker.value,
            "conversation": {
                "self_context": [vocab.decode(line) for line in self.conversation.self_context.lines],
                "partner_context": [vocab.decode(line) for line in self.conversation.partner_context.lines],
                "utterances": [
                    {
                        "speaker": u.speaker.value,
                        "tokens": list(u.tokens),
                        "text": u.text(vocab),
                        "truncated": u.truncated,
                    }
                    for u in self.conversation.utterances
                ],
            },
            "traces": [trace_to_dict(t, vocab) for t in self.traces],
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class SessionStore:
    """Directory of append-only session logs plus their in-memory state.

    Sessions are served concurrently; operations on a single session are
    serialized by a per-session lock, and every event is flushed and fsynced
    before the mutating call returns.
    """

    def __init__(self, data_dir: str | Path, registry: ModelRegistry):
        self.registry = registry
        self.dir = Path(data_dir) / "sessions"
        self.dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._engines: dict[str, Engine] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._store_lock = threading.Lock()
        for path in sorted(self.dir.glob("*.jsonl")):
            session = self._replay(path)
            self._sessions[session.id] = session
            self._locks[session.id] = threading.Lock()

    # -- persistence ------------------------------------------------------

    def _path(self, session_id: str) -> Path:
        return self.dir / f"{session_id}.jsonl"

    def _append_events(self, session_id: str, events: list[dict[str, Any]]) -> None:
        with open(self._path(session_id), "a", encoding="utf-8") as fh:
            for event in events:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _replay(self, path: Path) -> Session:
        session: Session | None = None
        engine: Engine | None = None
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                event = json.loads(line)
                ts = event["ts"]
                if event["event"] == "created":
                    config = SessionConfig.from_dict(event["config"])
                    engine = self._engine_for(config)
                    session = Session(
                        id=event["session_id"],
                        config=config,
                        conversation=engine.empty_conversation(),
                        created_at=ts,
                        updated_at=ts,
                    )
                    continue
                if session is None:
                    raise IngestionError(f"{path}: event before 'created'")
                if event["event"] == "utterance":
                    utt = Utterance(
                        SpeakerRole(event["speaker"]), tuple(event["tokens"]), event["truncated"]
                    )
                    session.conversation = session.conversation.with_utterance(utt)
                elif event["event"] == "trace":
                    session.traces.append(trace_from_dict(event["trace"]))
                session.updated_at = ts
        if session is None:
            raise IngestionError(f"{path}: empty session log")
        return session

    def _engine_for(self, config: SessionConfig) -> Engine:
        return Engine(config, self.registry)

    def _engine(self, session: Session) -> Engine:
        engine = self._engines.get(session.id)
        if engine is None:
            engine = self._engine_for(session.config)
            self._engines[session.id] = engine
        return engine

    # -- operations -------------------------------------------------------

    def ids(self) -> list[str]:
        with self._store_lock:
            return sorted(self._sessions)

    def get(self, session_id: str) -> Session:
        with self._store_lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise KeyError(f"unknown session {session_id!r}") from None

    def session_doc(self, session_id: str) -> dict[str, Any]:
        session = self.get(session_id)
        return session.to_doc(self._engine(session).vocab)

    def trace_doc(self, session_id: str, turn: int) -> dict[str, Any]:
        session = self.get(session_id)
        if not 0 <= turn < len(session.traces):
            raise KeyError(f"session {session_id!r} has no trace for turn {turn}")
        return trace_to_dict(session.traces[turn], self._engine(session).vocab)

    def create(self, config_doc: dict[str, Any]) -> Session:
        config = SessionConfig.from_dict(config_doc)
        engine = self._engine_for(config)  # validates model, params, contexts
        session_id = uuid.uuid4().hex[:12]
        ts = _now()
        session = Session(
            id=session_id,
            config=config,
            conversation=engine.empty_conversation(),
            created_at=ts,
            updated_at=ts,
        )
        events = [{"event": "created", "session_id": session_id, "config": config.to_dict(), "ts": ts}]
        # self always initiates: produce the opening utterance right away
        opening, trace = engine.reply(session.conversation)
        session.conversation = session.conversation.with_utterance(opening.utterance)
        session.traces.append(trace)
        events.append(_utterance_event(opening.utterance, ts))
        events.append({"event": "trace", "turn": 0, "trace": trace_to_dict(trace, engine.vocab), "ts": ts})
        self._append_events(session_id, events)  # durable before the session is visible
        with self._store_lock:
            self._sessions[session_id] = session
            self._engines[session_id] = engine
            self._locks[session_id] = threading.Lock()
        return session

    def post_partner_utterance(
        self, session_id: str, text: str, turn: int | None = None
    ) -> tuple[Utterance, int]:
        """Append the partner's utterance and the engine's reply atomically.

        ``turn``, when given, must equal the current conversation length; a
        stale value means the caller raced a previous post and yields a
        conflict instead of a duplicated turn.
        """
        session = self.get(session_id)
        with self._locks[session_id]:
            engine = self._engine(session)
            if turn is not None and turn != len(session.conversation):
                raise TurnConflictError(
                    f"expected turn {len(session.conversation)}, request targeted turn {turn}"
                )
            if session.conversation.next_speaker is not SpeakerRole.PARTNER:
                raise TurnConflictError("it is not the partner's turn")
            utterance = engine.partner_utterance(text)
            ts = _now()
            conversation = session.conversation.with_utterance(utterance)
            reply, trace = engine.reply(conversation)
            trace_index = len(session.traces)
            self._append_events(
                session_id,
                [
                    _utterance_event(utterance, ts),
                    _utterance_event(reply.utterance, ts),
                    {
                        "event": "trace",
                        "turn": trace_index,
                        "trace": trace_to_dict(trace, engine.vocab),
                        "ts": ts,
                    },
                ],
            )
            session.conversation = conversation.with_utterance(reply.utterance)
            session.traces.append(trace)
            session.updated_at = ts
            return reply.utterance, trace_index


def _utterance_event(utterance: Utterance, ts: str) -> dict[str, Any]:
    return {
        "event": "utterance",
        "speaker": utterance.speaker.value,
        "tokens": list(utterance.tokens),
        "truncated": utterance.truncated,
        "ts": ts,
    }
