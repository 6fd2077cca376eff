"""HTTP face of the session engine.

One process holds many independent sessions in memory; every mutation on a
session goes through that session's lock, so two racing applies serialize
instead of corrupting history. Nothing here computes repairs itself, it
only walks the session module.
"""

from __future__ import annotations

import json
import threading
import uuid
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .assertions import check_well_formed
from .errors import EmptyHistory, ParseError, SolverError, StaleChoice
from .logic import Decider, SolverConfig
from .parser import parse, format_assertion
from . import session as sessions

MAX_SOURCE_BYTES = 256 * 1024


class CreateBody(BaseModel):
    source: str


class ApplyBody(BaseModel):
    optionId: str


class _Store:
    def __init__(self, solver_cmd: str | None):
        self.solver_cmd = solver_cmd
        self.sessions: dict[str, sessions.AmendSession] = {}
        self.locks: dict[str, threading.Lock] = {}
        self.registry = threading.Lock()

    def decider(self) -> Decider:
        return Decider(SolverConfig.from_environment(self.solver_cmd))

    def add(self, session: sessions.AmendSession) -> str:
        sid = uuid.uuid4().hex[:12]
        with self.registry:
            self.sessions[sid] = session
            self.locks[sid] = threading.Lock()
        return sid

    def get(self, sid: str) -> sessions.AmendSession:
        found = self.sessions.get(sid)
        if found is None:
            raise HTTPException(status_code=404, detail=f"no session {sid}")
        return found

    def lock(self, sid: str) -> threading.Lock:
        lock = self.locks.get(sid)
        if lock is None:
            raise HTTPException(status_code=404, detail=f"no session {sid}")
        return lock

    def dump(self, path: Path) -> None:
        payload = {sid: json.loads(sessions.snapshot(s)) for sid, s in self.sessions.items()}
        path.write_text(json.dumps({"sessions": payload}, sort_keys=True))

    def load(self, path: Path) -> None:
        data = json.loads(path.read_text())
        for sid, snap in data.get("sessions", {}).items():
            restored = sessions.restore(json.dumps(snap), self.decider())
            with self.registry:
                self.sessions[sid] = restored
                self.locks[sid] = threading.Lock()


def _view(sid: str, session: sessions.AmendSession) -> dict:
    return {
        "sessionId": sid,
        "historyLength": len(session.history),
        "source": format_assertion(session.current),
        "violations": sessions.session_payload(session),
        "audit": list(session.audit),
    }


def create_app(
    solver_cmd: str | None = None,
    snapshot_path: str | None = None,
    cors_origin: str | None = None,
) -> FastAPI:
    store = _Store(solver_cmd)
    snap = Path(snapshot_path) if snapshot_path else None

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if snap is not None and snap.exists():
            store.load(snap)
        yield
        if snap is not None:
            store.dump(snap)

    app = FastAPI(title="choramend", lifespan=lifespan)
    if cors_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )
    app.state.store = store

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateBody):
        raw = body.source
        if len(raw.encode()) > MAX_SOURCE_BYTES:
            raise HTTPException(status_code=413, detail="source too large")
        try:
            g = parse(raw)
        except ParseError as exc:
            raise HTTPException(
                status_code=422,
                detail={
                    "message": exc.message,
                    "line": exc.line,
                    "column": exc.column,
                    "endLine": exc.end_line,
                    "endColumn": exc.end_column,
                },
            ) from exc
        defects = check_well_formed(g)
        if defects:
            raise HTTPException(
                status_code=422,
                detail={
                    "message": "; ".join(str(d) for d in defects),
                    "defects": [
                        {"kind": d.kind, "node": d.node_id, "message": d.message}
                        for d in defects
                    ],
                },
            )
        try:
            session = sessions.start_session(g, store.decider())
        except SolverError as exc:
            raise HTTPException(status_code=503, detail=f"solver error: {exc}") from exc
        sid = store.add(session)
        return _view(sid, session)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return _view(sid, store.get(sid))

    @app.get("/sessions/{sid}/violations/{vid}/options")
    def get_options(sid: str, vid: str):
        session = store.get(sid)
        for entry in sessions.session_payload(session):
            if entry["id"] == vid:
                return entry["options"]
        raise HTTPException(status_code=404, detail=f"no open violation {vid}")

    @app.post("/sessions/{sid}/apply")
    def apply_choice(sid: str, body: ApplyBody):
        with store.lock(sid):
            session = store.get(sid)
            try:
                session = sessions.apply(session, body.optionId)
            except StaleChoice as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            except SolverError as exc:
                raise HTTPException(status_code=503, detail=f"solver error: {exc}") from exc
            store.sessions[sid] = session
        return _view(sid, session)

    @app.post("/sessions/{sid}/undo")
    def undo_choice(sid: str):
        with store.lock(sid):
            session = store.get(sid)
            try:
                session = sessions.undo(session)
            except EmptyHistory as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            store.sessions[sid] = session
        return _view(sid, session)

    return app
