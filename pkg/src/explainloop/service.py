"""HTTP surface for live sessions.

A thin adapter over SessionEngine: every state change delegates to engine
operations, so a request sequence produces exactly the session that direct
engine calls would.  Endpoints:

- ``GET  /tasks``                       list the loaded corpus
- ``GET  /tasks/{task_id}``             one task with its full context
- ``POST /sessions``                    {task_id, mode} → snapshot
- ``GET  /sessions/{id}``               snapshot
- ``POST /sessions/{id}/feedback``      {text} → snapshot
- ``POST /sessions/{id}/complete``      → snapshot
- ``POST /sessions/{id}/skip``          {reason} → snapshot
- ``GET  /sessions/{id}/events``        server-sent events; ``?after=N`` or a
  ``Last-Event-ID`` header resumes from sequence N (exclusive)

Engine errors map to: 404 unknown ids, 409 InvalidState/DeadlineExceeded,
422 EmptyFeedback / bad request bodies.
"""

from __future__ import annotations

import asyncio
import json
import threading
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .errors import DeadlineExceeded, EmptyFeedback, InvalidState
from .session import Session, SessionEngine, SessionMode, SkipReason
from .tasks import TaskBundle


@dataclass(frozen=True)
class ApiEvent:
    session_id: str
    sequence: int
    kind: str  # TurnReady | AwaitingFeedback | Terminal | Error
    payload: dict

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "sequence": self.sequence,
            "kind": self.kind,
            "payload": self.payload,
        }


class EventLog:
    """Per-session, append-only, monotonically numbered event list."""

    def __init__(self) -> None:
        self._events: dict[str, list[ApiEvent]] = {}
        self._published_turns: dict[str, int] = {}
        self._lock = threading.Lock()

    def _append(self, session_id: str, kind: str, payload: dict) -> None:
        log = self._events.setdefault(session_id, [])
        log.append(ApiEvent(session_id, len(log) + 1, kind, payload))

    def publish_state(self, engine: SessionEngine, session: Session) -> None:
        """Diff the session against what has been announced and emit events."""
        with self._lock:
            sid = session.session_id
            snap = engine.snapshot(sid)
            seen = self._published_turns.get(sid, 0)
            for turn in snap["turns"][seen:]:
                self._append(sid, "TurnReady", turn)
            self._published_turns[sid] = len(snap["turns"])
            if session.last_error is not None:
                self._append(sid, "Error", {"message": session.last_error})
            if session.outcome is not None:
                self._append(
                    sid, "Terminal", {"state": snap["state"], "outcome": snap["outcome"]}
                )
            elif snap["state"] == "AwaitingFeedback":
                self._append(
                    sid, "AwaitingFeedback", {"turn_count": len(snap["turns"])}
                )

    def since(self, session_id: str, after: int) -> list[ApiEvent]:
        with self._lock:
            return [e for e in self._events.get(session_id, []) if e.sequence > after]

    def has_terminal_at_or_before(self, session_id: str, sequence: int) -> bool:
        with self._lock:
            return any(
                e.kind == "Terminal" and e.sequence <= sequence
                for e in self._events.get(session_id, [])
            )


class CreateSessionBody(BaseModel):
    task_id: str
    mode: str = SessionMode.GUIDED.value
    deadline_ms: int | None = None


class FeedbackBody(BaseModel):
    text: str


class SkipBody(BaseModel):
    reason: str


def create_app(engine: SessionEngine, corpus: list[TaskBundle]) -> FastAPI:
    app = FastAPI(title="explainloop", docs_url=None, redoc_url=None)
    # The browser UI is served as static files from a different origin.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    tasks_by_id = {task.task_id: task for task in corpus}
    events = EventLog()
    app.state.engine = engine
    app.state.events = events

    def _find_session(session_id: str) -> Session:
        try:
            return engine.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no such session: {session_id}")

    def _guard(fn, *args):
        try:
            return fn(*args)
        except EmptyFeedback as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except (InvalidState, DeadlineExceeded) as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.get("/tasks")
    def list_tasks() -> list[dict]:
        return [
            {
                "task_id": task.task_id,
                "language": task.language.value,
                "question": task.question,
                "difficulty": task.difficulty.level.value if task.difficulty else None,
            }
            for task in tasks_by_id.values()
        ]

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str) -> dict:
        task = tasks_by_id.get(task_id)
        if task is None:
            raise HTTPException(status_code=404, detail=f"no such task: {task_id}")
        ctx = task.context
        return {
            "task_id": task.task_id,
            "language": task.language.value,
            "question": task.question,
            "difficulty": task.difficulty.level.value if task.difficulty else None,
            "context": {
                "schema_text": ctx.schema_text,
                "sample_rows": {
                    table: [list(row) for row in rows]
                    for table, rows in ctx.sample_rows.items()
                },
                "test_cases": [
                    {"assertion": case.assertion, "expected": case.expected}
                    for case in ctx.test_cases
                ],
            },
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        task = tasks_by_id.get(body.task_id)
        if task is None:
            raise HTTPException(status_code=404, detail=f"no such task: {body.task_id}")
        try:
            mode = SessionMode(body.mode)
        except ValueError:
            raise HTTPException(status_code=422, detail=f"bad mode: {body.mode}")
        session = _guard(engine.start_session, task, mode, body.deadline_ms)
        events.publish_state(engine, session)
        return engine.snapshot(session.session_id)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        _find_session(session_id)
        return engine.snapshot(session_id)

    @app.post("/sessions/{session_id}/feedback")
    def post_feedback(session_id: str, body: FeedbackBody) -> dict:
        _find_session(session_id)
        try:
            session = _guard(engine.submit_feedback, session_id, body.text)
        finally:
            # A deadline hit finalizes the session even though the call raised.
            events.publish_state(engine, engine.get(session_id))
        return engine.snapshot(session.session_id)

    @app.post("/sessions/{session_id}/complete")
    def post_complete(session_id: str) -> dict:
        _find_session(session_id)
        try:
            session = _guard(engine.complete_session, session_id)
        finally:
            events.publish_state(engine, engine.get(session_id))
        return engine.snapshot(session.session_id)

    @app.post("/sessions/{session_id}/skip")
    def post_skip(session_id: str, body: SkipBody) -> dict:
        _find_session(session_id)
        try:
            reason = SkipReason(body.reason)
        except ValueError:
            raise HTTPException(status_code=422, detail=f"bad skip reason: {body.reason}")
        try:
            session = _guard(engine.skip_session, session_id, reason)
        finally:
            events.publish_state(engine, engine.get(session_id))
        return engine.snapshot(session.session_id)

    @app.get("/sessions/{session_id}/events")
    async def stream_events(session_id: str, request: Request, after: int = 0) -> StreamingResponse:
        _find_session(session_id)
        header_resume = request.headers.get("last-event-id")
        if header_resume is not None and header_resume.isdigit():
            after = max(after, int(header_resume))

        async def generator():
            cursor = after
            while True:
                fresh = events.since(session_id, cursor)
                for event in fresh:
                    cursor = event.sequence
                    data = json.dumps(event.to_json(), ensure_ascii=False)
                    yield f"id: {event.sequence}\nevent: {event.kind}\ndata: {data}\n\n"
                if events.has_terminal_at_or_before(session_id, cursor):
                    return
                if await request.is_disconnected():
                    return
                await asyncio.sleep(0.05)

        return StreamingResponse(generator(), media_type="text/event-stream")

    return app
