"""FastAPI service: the /rpc endpoint, health check, and UI assets."""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .errors import SketchlabError, ToolError
from .session import Session, handle_request


class RpcRequest(BaseModel):
    id: int | str | None = None
    kind: str
    payload: dict = Field(default_factory=dict)
    session: str = "default"


class RpcResponse(BaseModel):
    id: int | str | None = None
    ok: bool
    payload: dict


class SessionStore:
    """Sessions keyed by id; requests within one session are serialized."""

    def __init__(self, seed: int = 0):
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()
        self.seed = seed

    def dispatch(self, req: RpcRequest) -> RpcResponse:
        with self._guard:
            if req.session not in self._sessions:
                self._sessions[req.session] = Session.fresh(seed=self.seed)
                self._locks[req.session] = threading.Lock()
            session = self._sessions[req.session]
            lock = self._locks[req.session]
        with lock:
            try:
                payload = handle_request(session, req.kind, req.payload)
                return RpcResponse(id=req.id, ok=True, payload=payload)
            except ToolError as exc:
                return RpcResponse(id=req.id, ok=False, payload={
                    "error": exc.code, "message": str(exc),
                })
            except SketchlabError as exc:
                return RpcResponse(id=req.id, ok=False, payload={
                    "error": type(exc).__name__.lower(), "message": str(exc),
                })


def create_app(static_root: str | None = None, seed: int = 0) -> FastAPI:
    app = FastAPI(title="sketchlab")
    store = SessionStore(seed=seed)
    app.state.store = store

    @app.post("/rpc", response_model=RpcResponse)
    def rpc(req: RpcRequest) -> RpcResponse:
        return store.dispatch(req)

    @app.get("/health", response_class=PlainTextResponse)
    def health() -> str:
        return "ok"

    if static_root:
        root = Path(static_root)
        if root.is_dir():
            app.mount("/", StaticFiles(directory=str(root), html=True), name="ui")
    return app
