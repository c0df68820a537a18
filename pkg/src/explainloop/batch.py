"""Headless scripted runs: drive real sessions from canned feedback.

A ScriptedRun plays a user: start the session, submit each feedback string
in order, then press Complete (unless the session already ended, e.g. by
deadline).  With a replay gateway, a stepping clock, and sequential session
ids, repeated invocations produce byte-identical transcripts — the
determinism anchor for the whole loop.

A gateway failure (such as a cassette miss) aborts only that run: it is
recorded as an error result, the session never reaches a terminal event,
and the metrics layer skips it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import DeadlineExceeded, ExplainLoopError
from .gateway import Gateway, GatewayMode, ModelConfig
from .metrics import MetricsReport, compute_metrics, digest_sessions
from .prompts import DemoStore
from .session import (
    DEFAULT_MAX_TURNS,
    SessionEngine,
    SessionMode,
    TerminalKind,
)
from .tasks import TaskBundle
from .transcript import TranscriptWriter


@dataclass(frozen=True)
class ScriptedRun:
    task_id: str
    mode: SessionMode = SessionMode.GUIDED
    scripted_feedback: tuple[str, ...] = ()
    expected_terminal: str | None = None

    def __post_init__(self) -> None:
        if len(self.scripted_feedback) > DEFAULT_MAX_TURNS:
            raise ValueError("scripted_feedback exceeds the turn cap")


@dataclass(frozen=True)
class RunResult:
    task_id: str
    session_id: str | None
    status: str  # "ok" | "error"
    terminal_kind: str | None = None
    success: bool | None = None
    matched_expectation: bool | None = None
    error: str | None = None


class SteppingClock:
    """Fake epoch-ms clock: advances a fixed step on every reading."""

    def __init__(self, start_ms: int = 1_000_000, step_ms: int = 1_000):
        self.now_ms = start_ms
        self.step_ms = step_ms

    def __call__(self) -> int:
        current = self.now_ms
        self.now_ms += self.step_ms
        return current

    def advance(self, delta_ms: int) -> None:
        self.now_ms += delta_ms


def sequential_ids(prefix: str = "run"):
    counter = 0

    def factory() -> str:
        nonlocal counter
        counter += 1
        return f"{prefix}-{counter:04d}"

    return factory


def run_batch(
    runs: list[ScriptedRun],
    corpus: list[TaskBundle],
    gateway: Gateway,
    gateway_mode: GatewayMode = GatewayMode.REPLAY,
    config: ModelConfig | None = None,
    store: DemoStore | None = None,
    transcript_path: str | Path | None = None,
    deadline_ms: int = 300_000,
    clock: SteppingClock | None = None,
) -> tuple[TranscriptWriter, MetricsReport, list[RunResult]]:
    by_id = {task.task_id: task for task in corpus}
    transcript = TranscriptWriter(transcript_path)
    engine = SessionEngine(
        gateway=gateway,
        config=config,
        store=store,
        gateway_mode=gateway_mode,
        transcript=transcript,
        clock=clock or SteppingClock(),
        id_factory=sequential_ids(),
        deadline_ms=deadline_ms,
    )

    results: list[RunResult] = []
    for run in runs:
        task = by_id.get(run.task_id)
        if task is None:
            results.append(
                RunResult(run.task_id, None, "error", error="unknown task")
            )
            continue
        try:
            session = engine.start_session(task, run.mode)
            if session.last_error is not None and not session.turns:
                results.append(
                    RunResult(
                        run.task_id, session.session_id, "error",
                        error=session.last_error,
                    )
                )
                continue
            aborted = False
            for feedback in run.scripted_feedback:
                if session.is_terminal:
                    break
                try:
                    session = engine.submit_feedback(session.session_id, feedback)
                except DeadlineExceeded:
                    break
                if session.last_error is not None:
                    results.append(
                        RunResult(
                            run.task_id, session.session_id, "error",
                            error=session.last_error,
                        )
                    )
                    aborted = True
                    break
            if aborted:
                continue
            if not session.is_terminal:
                try:
                    session = engine.complete_session(session.session_id)
                except DeadlineExceeded:
                    session = engine.get(session.session_id)
        except ExplainLoopError as exc:
            results.append(
                RunResult(run.task_id, None, "error", error=f"{type(exc).__name__}: {exc}")
            )
            continue

        outcome = session.outcome
        kind = outcome.kind.value if outcome else None
        results.append(
            RunResult(
                task_id=run.task_id,
                session_id=session.session_id,
                status="ok",
                terminal_kind=kind,
                success=outcome.final_verdict.success if outcome else None,
                matched_expectation=(
                    None if run.expected_terminal is None else kind == run.expected_terminal
                ),
            )
        )

    report = compute_metrics(transcript.events, corpus)
    return transcript, report, results
