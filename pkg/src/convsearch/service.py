"""HTTP session service.

Endpoints (JSON bodies throughout):

    POST /sessions                       create a session; engine opens
    GET  /sessions/{id}                  full session document
    POST /sessions/{id}/utterances       partner speaks; engine replies
    GET  /sessions/{id}/traces/{turn}    search trace for one engine turn
    GET  /models                         model registry listing
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

from fastapi import Body, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from .errors import ConfigurationError, IngestionError
from .registry import ModelRegistry
from .session import SessionStore, TurnConflictError


def create_app(
    data_dir: str | Path = ".convsearch",
    models_dir: str | Path | None = None,
    registry: ModelRegistry | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    if registry is None:
        registry = ModelRegistry.load(models_dir)
    store = SessionStore(data_dir, registry)

    app = FastAPI(title="convsearch session service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.registry = registry

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.get("/models")
    def list_models() -> list[dict[str, Any]]:
        return registry.describe()

    @app.post("/sessions", status_code=201)
    def create_session(config: dict[str, Any] = Body(...)) -> dict[str, Any]:
        try:
            session = store.create(config)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc.args[0])) from None
        except (ValueError, ConfigurationError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        except IngestionError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return store.session_doc(session.id)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict[str, Any]:
        try:
            return store.session_doc(session_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc.args[0])) from None

    @app.post("/sessions/{session_id}/utterances")
    def post_utterance(session_id: str, body: dict[str, Any] = Body(...)) -> dict[str, Any]:
        text = body.get("text")
        if not isinstance(text, str):
            raise HTTPException(status_code=422, detail="body requires a string 'text' field")
        turn = body.get("turn")
        if turn is not None and not isinstance(turn, int):
            raise HTTPException(status_code=422, detail="'turn' must be an integer")
        try:
            reply, trace_index = store.post_partner_utterance(session_id, text, turn)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc.args[0])) from None
        except TurnConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except IngestionError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        session = store.get(session_id)
        vocab = store.registry.get(session.config.model).vocab
        return {
            "reply": {
                "speaker": reply.speaker.value,
                "tokens": list(reply.tokens),
                "text": reply.text(vocab),
                "truncated": reply.truncated,
            },
            "trace_index": trace_index,
        }

    @app.get("/sessions/{session_id}/traces/{turn}")
    def get_trace(session_id: str, turn: int) -> dict[str, Any]:
        try:
            return store.trace_doc(session_id, turn)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc.args[0])) from None

    return app
