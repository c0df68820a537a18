"""Conversational code-generation sessions.

A session drives one task through generate → execute → explain →
await-feedback → correct until the user completes, skips, or the deadline
fires.  Two modes:

- ``guided``: every turn carries executed results plus a natural-language
  explanation (a restated question for SQL, a program description for
  Python); feedback flows through a structured correction prompt.
- ``vanilla``: plain free-form chat with conversation history.  Code is
  still extracted and executed internally so metrics can score the session,
  but snapshots expose no execution panel.

The event-level state machine is TRANSITION_TABLE below — the single source
of truth consulted at runtime and enumerated exhaustively in tests.
Intermediate pipeline states (Generating, Explaining, Correcting) are pass-
through: the engine enters and leaves them within one event's handling, so
user events landing there are rejected.

The deadline (default 300 000 ms) is server-authoritative and checked at
every event; ``elapsed_ms`` in a terminal outcome is clamped to the deadline
plus a 2 000 ms grace for in-flight model calls.
"""

from __future__ import annotations

import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .errors import (
    DeadlineExceeded,
    EmptyFeedback,
    GatewayError,
    InvalidState,
)
from .gateway import Gateway, GatewayMode, ModelConfig
from .prompts import (
    DemoStore,
    Message,
    PromptBundle,
    Role,
    build_codegen_prompt,
    build_correction_prompt,
    build_description_prompt,
    build_restatement_prompt,
    build_vanilla_prompt,
    render_task_context,
)
from .sandbox import (
    ExecStatus,
    ExecutionOutcome,
    SuccessVerdict,
    VerdictReason,
    judge_python,
    judge_sql,
    run_python,
    run_sql,
)
from .tasks import Language, TaskBundle
from .transcript import TranscriptEvent, TranscriptWriter

DEFAULT_DEADLINE_MS = 300_000
GRACE_MS = 2_000
DEFAULT_MAX_TURNS = 20


class SessionMode(str, Enum):
    GUIDED = "guided"
    VANILLA = "vanilla"


class SessionState(str, Enum):
    AWAITING_START = "AwaitingStart"
    GENERATING = "Generating"
    EXPLAINING = "Explaining"
    AWAITING_FEEDBACK = "AwaitingFeedback"
    CORRECTING = "Correcting"
    COMPLETED = "Completed"
    SKIPPED_UNCLEAR_QUESTION = "SkippedUnclearQuestion"
    SKIPPED_UNSOLVABLE = "SkippedUnsolvable"
    TIMED_OUT = "TimedOut"


TERMINAL_STATES = frozenset(
    {
        SessionState.COMPLETED,
        SessionState.SKIPPED_UNCLEAR_QUESTION,
        SessionState.SKIPPED_UNSOLVABLE,
        SessionState.TIMED_OUT,
    }
)


class SessionEvent(str, Enum):
    START = "start"
    FEEDBACK = "feedback"
    COMPLETE = "complete"
    SKIP_UNCLEAR = "skip_unclear"
    SKIP_UNSOLVABLE = "skip_unsolvable"
    TICK = "tick"


def _table() -> dict[tuple[SessionState, SessionEvent], SessionState | None]:
    """Total transition table: None means InvalidState.

    tick is legal everywhere and nominally an identity transition; the
    deadline overlay (applied before the table is consulted) is what turns a
    tick into TimedOut.  Terminal states absorb: only tick is legal there.
    """
    S, E = SessionState, SessionEvent
    table: dict[tuple[SessionState, SessionEvent], SessionState | None] = {}
    for state in S:
        for event in E:
            table[(state, event)] = None
    for state in S:
        table[(state, E.TICK)] = state
    table[(S.AWAITING_START, E.START)] = S.GENERATING
    table[(S.AWAITING_FEEDBACK, E.FEEDBACK)] = S.CORRECTING
    table[(S.AWAITING_FEEDBACK, E.COMPLETE)] = S.COMPLETED
    table[(S.AWAITING_FEEDBACK, E.SKIP_UNCLEAR)] = S.SKIPPED_UNCLEAR_QUESTION
    table[(S.AWAITING_FEEDBACK, E.SKIP_UNSOLVABLE)] = S.SKIPPED_UNSOLVABLE
    return table


TRANSITION_TABLE = _table()


class TerminalKind(str, Enum):
    COMPLETED_BY_USER = "CompletedByUser"
    SKIP_UNCLEAR = "SkipUnclear"
    SKIP_UNSOLVABLE = "SkipUnsolvable"
    TIMEOUT = "Timeout"


class SkipReason(str, Enum):
    UNCLEAR_QUESTION = "UnclearQuestion"
    UNSOLVABLE = "Unsolvable"


_STATE_FOR_KIND = {
    TerminalKind.COMPLETED_BY_USER: SessionState.COMPLETED,
    TerminalKind.SKIP_UNCLEAR: SessionState.SKIPPED_UNCLEAR_QUESTION,
    TerminalKind.SKIP_UNSOLVABLE: SessionState.SKIPPED_UNSOLVABLE,
    TerminalKind.TIMEOUT: SessionState.TIMED_OUT,
}


@dataclass(frozen=True)
class TerminalOutcome:
    kind: TerminalKind
    final_verdict: SuccessVerdict
    elapsed_ms: int

    def __post_init__(self) -> None:
        if self.elapsed_ms < 0:
            raise ValueError("elapsed_ms must be non-negative")


@dataclass
class Turn:
    index: int
    code: str
    explanation: str
    model_reply: str
    execution: ExecutionOutcome
    verdict: SuccessVerdict
    user_feedback: str | None = None
    prompts_used: tuple[str, ...] = ()


@dataclass
class Session:
    session_id: str
    task: TaskBundle
    mode: SessionMode
    state: SessionState
    turns: list[Turn]
    started_at: int
    deadline_ms: int = DEFAULT_DEADLINE_MS
    outcome: TerminalOutcome | None = None
    last_error: str | None = None

    def __post_init__(self) -> None:
        if self.deadline_ms <= 0:
            raise ValueError("deadline_ms must be positive")

    @property
    def is_terminal(self) -> bool:
        return self.state in TERMINAL_STATES


# -- code extraction ------------------------------------------------------------

_FENCE_RE = re.compile(r"```[ \t]*(?:\w+)?[ \t]*\n(.*?)```", re.DOTALL)
_SQL_STARTERS = ("select", "with", "insert", "update", "delete")


def extract_code(text: str, language: Language) -> str:
    """Pull the code payload out of a model reply.

    Fenced blocks win; otherwise take the reply from the first line that
    looks like code.  A reply with no recognizable code comes back verbatim —
    executing prose and failing honestly beats silently dropping the turn.
    """
    match = _FENCE_RE.search(text)
    if match:
        return match.group(1).strip()
    stripped = text.strip()
    if language is Language.SQL:
        lines = stripped.splitlines()
        for i, line in enumerate(lines):
            if line.strip().lower().startswith(_SQL_STARTERS):
                return "\n".join(lines[i:]).strip()
    return stripped


def default_clock() -> int:
    return int(time.time() * 1000)


class SessionEngine:
    """Owns every live session; all mutations flow through event methods.

    Each session is single-writer (a per-session lock serializes its
    events); distinct sessions proceed concurrently.
    """

    def __init__(
        self,
        gateway: Gateway,
        config: ModelConfig | None = None,
        store: DemoStore | None = None,
        gateway_mode: GatewayMode = GatewayMode.REPLAY,
        transcript: TranscriptWriter | None = None,
        clock: Callable[[], int] = default_clock,
        id_factory: Callable[[], str] | None = None,
        deadline_ms: int = DEFAULT_DEADLINE_MS,
        sql_limit_ms: int | None = None,
        python_case_limit_ms: int | None = None,
        max_turns: int = DEFAULT_MAX_TURNS,
    ):
        self.gateway = gateway
        self.config = config or ModelConfig()
        self.store = store or DemoStore.load_default()
        self.gateway_mode = gateway_mode
        self.transcript = transcript or TranscriptWriter()
        self.clock = clock
        self.id_factory = id_factory or (lambda: uuid.uuid4().hex[:12])
        self.deadline_ms = deadline_ms
        self.sql_limit_ms = sql_limit_ms
        self.python_case_limit_ms = python_case_limit_ms
        self.max_turns = max_turns
        self.sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._gold_cache: dict[str, ExecutionOutcome] = {}
        self._registry_lock = threading.Lock()

    # -- lookup ---------------------------------------------------------------

    def get(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise KeyError(f"no such session: {session_id}")

    def _lock(self, session_id: str) -> threading.RLock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.RLock())

    # -- event plumbing ---------------------------------------------------------

    def _emit(self, kind: str, session: Session, payload: dict) -> None:
        self.transcript.emit(
            TranscriptEvent(
                kind=kind,
                at_ms=self.clock(),
                session_id=session.session_id,
                payload=payload,
            )
        )

    def _apply(self, session: Session, event: SessionEvent) -> SessionState:
        """Deadline overlay first, then the transition table."""
        if self._expire_if_due(session):
            # The session became TimedOut just now: swallow ticks, refuse
            # user events.  Sessions that were already terminal fall through
            # to the table, which absorbs ticks and rejects the rest.
            if event is SessionEvent.TICK:
                return session.state
            raise DeadlineExceeded(
                f"session {session.session_id} timed out before {event.value}"
            )
        target = TRANSITION_TABLE[(session.state, event)]
        if target is None:
            raise InvalidState(session.state.value, event.value)
        session.state = target
        return target

    def _expire_if_due(self, session: Session) -> bool:
        """Finalize as Timeout when the deadline has passed; True only then."""
        if session.is_terminal:
            return False
        now = self.clock()
        if now - session.started_at > session.deadline_ms:
            verdict = (
                session.turns[-1].verdict
                if session.turns
                else SuccessVerdict(False, VerdictReason.EXECUTION_FAILED)
            )
            self._finalize(session, TerminalKind.TIMEOUT, verdict)
            return True
        return False

    def _finalize(
        self, session: Session, kind: TerminalKind, verdict: SuccessVerdict
    ) -> None:
        elapsed = max(0, self.clock() - session.started_at)
        elapsed = min(elapsed, session.deadline_ms + GRACE_MS)
        session.outcome = TerminalOutcome(
            kind=kind, final_verdict=verdict, elapsed_ms=elapsed
        )
        session.state = _STATE_FOR_KIND[kind]
        self._emit(
            "terminal",
            session,
            {
                "kind": kind.value,
                "final_verdict": {
                    "success": verdict.success,
                    "reason": verdict.reason.value,
                },
                "elapsed_ms": elapsed,
                "state": session.state.value,
            },
        )

    # -- execution helpers --------------------------------------------------------

    def _gold_outcome(self, task: TaskBundle) -> ExecutionOutcome:
        cached = self._gold_cache.get(task.task_id)
        if cached is None:
            kwargs = {}
            if self.sql_limit_ms is not None:
                kwargs["limit_ms"] = self.sql_limit_ms
            cached = run_sql(task.gold_code, task.context.database_ref, **kwargs)
            self._gold_cache[task.task_id] = cached
        return cached

    def _execute(self, task: TaskBundle, code: str) -> tuple[ExecutionOutcome, SuccessVerdict]:
        if not code.strip():
            outcome = ExecutionOutcome(
                status=ExecStatus.SETUP_ERROR,
                stderr_excerpt="no code found in model reply",
            )
            return outcome, SuccessVerdict(False, VerdictReason.EXECUTION_FAILED)
        if task.language is Language.SQL:
            kwargs = {}
            if self.sql_limit_ms is not None:
                kwargs["limit_ms"] = self.sql_limit_ms
            outcome = run_sql(code, task.context.database_ref, **kwargs)
            verdict = judge_sql(outcome, self._gold_outcome(task), task.gold_code)
        else:
            kwargs = {}
            if self.python_case_limit_ms is not None:
                kwargs["per_case_limit_ms"] = self.python_case_limit_ms
            cases = [c.assertion for c in task.context.test_cases]
            outcome = run_python(code, cases, **kwargs)
            verdict = judge_python(outcome)
        return outcome, verdict

    def _complete_prompt(self, bundle: PromptBundle) -> str:
        return self.gateway.complete(bundle, self.config, self.gateway_mode)

    def _explain(self, session: Session, code: str) -> tuple[str, str]:
        """Returns (explanation, prompt fingerprint)."""
        if session.task.language is Language.SQL:
            bundle = build_restatement_prompt(code, session.task.question, self.store)
        else:
            bundle = build_description_prompt(code, self.store)
        return self._complete_prompt(bundle).strip(), bundle.fingerprint

    def _turn_payload(self, turn: Turn) -> dict:
        return {
            "index": turn.index,
            "code": turn.code,
            "explanation": turn.explanation,
            "model_reply": turn.model_reply,
            "execution": {
                "status": turn.execution.status.value,
                "sql_rows": [list(r) for r in turn.execution.sql_rows],
                "case_results": [
                    {"index": c.index, "passed": c.passed, "detail": c.detail}
                    for c in turn.execution.case_results
                ],
            },
            "verdict": {
                "success": turn.verdict.success,
                "reason": turn.verdict.reason.value,
            },
            "prompts_used": list(turn.prompts_used),
        }

    def _run_turn(self, session: Session, bundle: PromptBundle) -> None:
        """Shared tail of the generate and correct pipelines.

        Atomic: either a full turn (code + execution + explanation) is
        appended and the session reaches AwaitingFeedback, or no turn is
        appended and the session parks in AwaitingFeedback with last_error.
        """
        try:
            reply = self._complete_prompt(bundle)
            code = extract_code(reply, session.task.language)
            execution, verdict = self._execute(session.task, code)
            fingerprints = [bundle.fingerprint]
            explanation = ""
            if session.mode is SessionMode.GUIDED:
                session.state = SessionState.EXPLAINING
                explanation, explain_fp = self._explain(session, code)
                fingerprints.append(explain_fp)
        except GatewayError as exc:
            session.last_error = f"{type(exc).__name__}: {exc}"
            session.state = SessionState.AWAITING_FEEDBACK
            return
        session.last_error = None
        turn = Turn(
            index=len(session.turns),
            code=code,
            explanation=explanation,
            model_reply=reply,
            execution=execution,
            verdict=verdict,
            prompts_used=tuple(fingerprints),
        )
        session.turns.append(turn)
        session.state = SessionState.AWAITING_FEEDBACK
        self._emit("turn_added", session, self._turn_payload(turn))

    # -- conversation history (vanilla mode) --------------------------------------

    def _vanilla_history(self, session: Session) -> list[Message]:
        history = [Message(Role.USER, self._question_block(session.task))]
        for turn in session.turns:
            history.append(Message(Role.ASSISTANT, turn.model_reply))
            if turn.user_feedback is not None:
                history.append(Message(Role.USER, turn.user_feedback))
        return history

    @staticmethod
    def _question_block(task: TaskBundle) -> str:
        context = render_task_context(task)
        if context:
            return f"{task.question}\n{context}"
        return task.question

    # -- public operations -----------------------------------------------------

    def start_session(
        self,
        task: TaskBundle,
        mode: SessionMode = SessionMode.GUIDED,
        deadline_ms: int | None = None,
    ) -> Session:
        task.validate()
        session = Session(
            session_id=self.id_factory(),
            task=task,
            mode=mode,
            state=SessionState.AWAITING_START,
            turns=[],
            started_at=self.clock(),
            deadline_ms=deadline_ms or self.deadline_ms,
        )
        with self._registry_lock:
            self.sessions[session.session_id] = session
            self._locks[session.session_id] = threading.RLock()
        with self._locks[session.session_id]:
            self._emit(
                "session_created",
                session,
                {
                    "task_id": task.task_id,
                    "mode": mode.value,
                    "deadline_ms": session.deadline_ms,
                    "started_at": session.started_at,
                },
            )
            self._apply(session, SessionEvent.START)
            if mode is SessionMode.GUIDED:
                bundle = build_codegen_prompt(task, self.store)
            else:
                bundle = build_vanilla_prompt(self._vanilla_history(session))
            self._run_turn(session, bundle)
        return session

    def submit_feedback(self, session_id: str, feedback: str) -> Session:
        session = self.get(session_id)
        with self._lock(session_id):
            if not feedback.strip():
                raise EmptyFeedback("feedback is empty; nothing to correct")
            self._apply(session, SessionEvent.FEEDBACK)  # -> Correcting
            feedback = feedback.strip()
            if len(session.turns) >= self.max_turns:
                # Turn cap: stop spending model calls; user can complete/skip.
                session.last_error = (
                    f"turn cap ({self.max_turns}) reached; complete or skip"
                )
                session.state = SessionState.AWAITING_FEEDBACK
                return session
            if not session.turns:
                # The opening generation failed and parked us; retry it.
                self._emit("feedback", session, {"turn_index": None, "text": feedback})
                if session.mode is SessionMode.GUIDED:
                    bundle = build_codegen_prompt(session.task, self.store)
                else:
                    history = self._vanilla_history(session)
                    history.append(Message(Role.USER, feedback))
                    bundle = build_vanilla_prompt(history)
                self._run_turn(session, bundle)
                return session
            previous = session.turns[-1]
            previous.user_feedback = feedback
            self._emit(
                "feedback", session, {"turn_index": previous.index, "text": feedback}
            )
            if session.mode is SessionMode.GUIDED:
                bundle = build_correction_prompt(
                    code=previous.code,
                    explanation=previous.explanation,
                    feedback=feedback,
                    task=session.task,
                    store=self.store,
                )
            else:
                bundle = build_vanilla_prompt(self._vanilla_history(session))
            self._run_turn(session, bundle)
        return session

    def complete_session(self, session_id: str) -> Session:
        session = self.get(session_id)
        with self._lock(session_id):
            self._apply(session, SessionEvent.COMPLETE)
            verdict = (
                session.turns[-1].verdict
                if session.turns
                else SuccessVerdict(False, VerdictReason.EXECUTION_FAILED)
            )
            # _apply already moved state; _finalize re-sets it consistently.
            self._finalize(session, TerminalKind.COMPLETED_BY_USER, verdict)
        return session

    def skip_session(self, session_id: str, reason: SkipReason) -> Session:
        session = self.get(session_id)
        with self._lock(session_id):
            if reason is SkipReason.UNCLEAR_QUESTION:
                event, kind = SessionEvent.SKIP_UNCLEAR, TerminalKind.SKIP_UNCLEAR
            else:
                event, kind = SessionEvent.SKIP_UNSOLVABLE, TerminalKind.SKIP_UNSOLVABLE
            self._apply(session, event)
            verdict = (
                session.turns[-1].verdict
                if session.turns
                else SuccessVerdict(False, VerdictReason.EXECUTION_FAILED)
            )
            self._finalize(session, kind, verdict)
        return session

    def tick(self, session_id: str) -> Session:
        session = self.get(session_id)
        with self._lock(session_id):
            self._apply(session, SessionEvent.TICK)
        return session

    def tick_all(self) -> None:
        for session_id in list(self.sessions):
            self.tick(session_id)

    # -- snapshots ---------------------------------------------------------------

    def snapshot(self, session_id: str) -> dict:
        """JSON-ready view of a session.

        Vanilla mode hides execution results and explanations: that panel
        exists only in guided mode.  The verdict is still exposed to the
        metrics layer through transcripts, not through this view.
        """
        session = self.get(session_id)
        with self._lock(session_id):
            guided = session.mode is SessionMode.GUIDED
            turns = []
            for turn in session.turns:
                entry = {
                    "index": turn.index,
                    "code": turn.code,
                    "model_reply": turn.model_reply,
                    "user_feedback": turn.user_feedback,
                }
                if guided:
                    entry["explanation"] = turn.explanation
                    entry["execution"] = {
                        "status": turn.execution.status.value,
                        "sql_rows": [list(r) for r in turn.execution.sql_rows],
                        "case_results": [
                            {
                                "index": c.index,
                                "passed": c.passed,
                                "detail": c.detail,
                            }
                            for c in turn.execution.case_results
                        ],
                        "stderr_excerpt": turn.execution.stderr_excerpt,
                    }
                    entry["verdict"] = {
                        "success": turn.verdict.success,
                        "reason": turn.verdict.reason.value,
                    }
                turns.append(entry)
            snap = {
                "session_id": session.session_id,
                "task_id": session.task.task_id,
                "question": session.task.question,
                "language": session.task.language.value,
                "mode": session.mode.value,
                "state": session.state.value,
                "started_at": session.started_at,
                "deadline_ms": session.deadline_ms,
                "turns": turns,
                "last_error": session.last_error,
                "outcome": None,
            }
            if session.outcome is not None:
                snap["outcome"] = {
                    "kind": session.outcome.kind.value,
                    "final_verdict": {
                        "success": session.outcome.final_verdict.success,
                        "reason": session.outcome.final_verdict.reason.value,
                    },
                    "elapsed_ms": session.outcome.elapsed_ms,
                }
            return snap
