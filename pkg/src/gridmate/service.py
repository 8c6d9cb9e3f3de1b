"""Session service: HTTP routes plus a server-sent-events stream per session.

All routes live under /v1. A session owns one workbook and one backend;
posting a message starts a turn in a worker thread and the event stream
carries everything the turn produces, monotonically numbered so a client
can reconnect with Last-Event-ID and resume without loss. The chat UI is
a pure consumer of these routes.
"""

from __future__ import annotations

import json
import secrets
import threading
from pathlib import Path

from fastapi import FastAPI, Header, Query, Request
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse, Response, StreamingResponse

from gridmate.codec import (
    export_csv,
    proto_from_table,
    render_markdown,
    serialize_state,
)
from gridmate.gateway import BackendConfig, make_backend
from gridmate.orchestrator import NothingToUndo, Session, TurnInFlight

DEFAULT_PORT = 7341
_STREAM_POLL_SECONDS = 0.2


class SessionStore:
    def __init__(self, config: BackendConfig):
        self.config = config
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()

    def create(self) -> Session:
        session = Session(
            backend=make_backend(self.config),
            session_id=secrets.token_hex(8),
        )
        with self.lock:
            self.sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session | None:
        with self.lock:
            return self.sessions.get(session_id)


def _not_found() -> JSONResponse:
    return JSONResponse({"error": "unknown session"}, status_code=404)


def _sse_frame(event: dict) -> str:
    data = json.dumps(event["data"], separators=(",", ":"), ensure_ascii=False)
    return f"id: {event['n']}\nevent: {event['type']}\ndata: {data}\n\n"


def create_app(config: BackendConfig | None = None, ui_dir: str | Path | None = None) -> FastAPI:
    store = SessionStore(config or BackendConfig.from_env())
    app = FastAPI(title="gridmate", version="0.1.0")
    app.state.store = store

    @app.post("/v1/sessions", status_code=201)
    def create_session() -> dict:
        session = store.create()
        return {"id": session.id}

    @app.post("/v1/sessions/{session_id}/messages", status_code=202)
    async def post_message(session_id: str, request: Request):
        session = store.get(session_id)
        if session is None:
            return _not_found()
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "body must be JSON"}, status_code=400)
        text = body.get("text") if isinstance(body, dict) else None
        if not isinstance(text, str) or not text.strip():
            return JSONResponse({"error": "body needs a non-empty 'text'"}, status_code=400)
        return _start_turn(session, text)

    def _start_turn(session: Session, text: str):
        if not session.reserve_turn():
            return JSONResponse({"error": "a turn is already in flight"}, status_code=409)
        thread = threading.Thread(
            target=session.run_turn, args=(text,), kwargs={"_reserved": True},
            name=f"turn-{session.id}", daemon=True,
        )
        thread.start()
        return JSONResponse({"status": "accepted", "after": len(session.events)}, status_code=202)

    @app.get("/v1/sessions/{session_id}/events")
    def events(
        session_id: str,
        after: int = Query(default=None),
        follow: bool = Query(default=True),
        last_event_id: str | None = Header(default=None, alias="Last-Event-ID"),
    ):
        session = store.get(session_id)
        if session is None:
            return _not_found()
        cursor = after
        if cursor is None and last_event_id is not None:
            try:
                cursor = int(last_event_id)
            except ValueError:
                cursor = 0
        if cursor is None:
            cursor = 0

        def stream(start: int):
            position = start
            while True:
                batch = session.events_after(position)
                for event in batch:
                    position = event["n"]
                    yield _sse_frame(event)
                with session.lock:
                    active = session.turn_active
                    has_more = len(session.events) > 0 and session.events[-1]["n"] > position
                if has_more:
                    continue
                if not follow and not active:
                    return
                with session.event_seen:
                    session.event_seen.wait(timeout=_STREAM_POLL_SECONDS)

        return StreamingResponse(stream(cursor), media_type="text/event-stream")

    @app.post("/v1/sessions/{session_id}/suggestions/{index}/accept", status_code=202)
    def accept_suggestion(session_id: str, index: int):
        session = store.get(session_id)
        if session is None:
            return _not_found()
        pending = session.conversation.pending_suggestions
        if not pending:
            return JSONResponse({"error": "no suggestions pending"}, status_code=409)
        if not 0 <= index < len(pending):
            return JSONResponse({"error": f"suggestion index must be 0..{len(pending) - 1}"},
                                status_code=400)
        return _start_turn(session, pending[index].text)

    @app.post("/v1/sessions/{session_id}/stop", status_code=202)
    def stop(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _not_found()
        session.stop()
        return JSONResponse({"status": "stopping"}, status_code=202)

    @app.post("/v1/sessions/{session_id}/undo")
    def undo(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _not_found()
        try:
            session.undo()
        except (NothingToUndo, TurnInFlight) as error:
            return JSONResponse({"error": str(error)}, status_code=409)
        return {"status": "ok", "revision": session.workbook.revision}

    @app.get("/v1/sessions/{session_id}/workbook")
    def workbook(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _not_found()
        return Response(serialize_state(session.workbook), media_type="application/json")

    @app.get("/v1/sessions/{session_id}/workbook/export")
    def export(session_id: str, fmt: str = Query(default="json"), table: str | None = Query(default=None)):
        session = store.get(session_id)
        if session is None:
            return _not_found()
        if fmt == "json":
            return Response(serialize_state(session.workbook), media_type="application/json")
        tables = [t for sheet in session.workbook.sheets for t in sheet.tables]
        if fmt == "md":
            chunks = [render_markdown(proto_from_table(t)) for t in tables]
            return PlainTextResponse("\n\n".join(chunks), media_type="text/markdown")
        if fmt == "csv":
            if table is not None:
                if not session.workbook.has_table(table):
                    return JSONResponse({"error": f"no table named {table!r}"}, status_code=400)
                target = session.workbook.table(table)
            elif len(tables) == 1:
                target = tables[0]
            else:
                return JSONResponse(
                    {"error": "workbook has several tables; pass ?table=NAME"}, status_code=400)
            return PlainTextResponse(export_csv(target), media_type="text/csv")
        return JSONResponse({"error": "fmt must be csv, md, or json"}, status_code=400)

    if ui_dir is not None and Path(ui_dir).is_dir():
        _mount_ui(app, Path(ui_dir))

    return app


def _mount_ui(app: FastAPI, ui_dir: Path) -> None:
    from fastapi.staticfiles import StaticFiles

    index = ui_dir / "index.html"
    if index.exists():
        @app.get("/", response_class=HTMLResponse)
        def root() -> str:
            return index.read_text(encoding="utf-8")

    app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")
