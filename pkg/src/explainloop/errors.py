"""Shared exception types.

Every module raises subclasses of :class:`ExplainLoopError` so callers can
catch engine failures without also swallowing programming errors.
"""

from __future__ import annotations


class ExplainLoopError(Exception):
    """Base class for all errors raised by this package."""


# -- corpus / task loading ---------------------------------------------------


class MissingManifest(ExplainLoopError):
    def __init__(self, path: str):
        super().__init__(f"corpus manifest not found: {path}")
        self.path = path


class MalformedTask(ExplainLoopError):
    def __init__(self, task_id: str, reason: str):
        super().__init__(f"malformed task {task_id!r}: {reason}")
        self.task_id = task_id
        self.reason = reason


class DanglingDatabaseRef(ExplainLoopError):
    def __init__(self, task_id: str, database_ref: str):
        super().__init__(
            f"task {task_id!r} references missing database: {database_ref}"
        )
        self.task_id = task_id
        self.database_ref = database_ref


# -- SQL lexing / difficulty -------------------------------------------------


class UnlexableInput(ExplainLoopError):
    def __init__(self, which: str, position: int, detail: str = ""):
        msg = f"cannot lex {which} at offset {position}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.which = which
        self.position = position


# -- prompt assembly ---------------------------------------------------------


class MissingDemos(ExplainLoopError):
    def __init__(self, what: str):
        super().__init__(f"demo store has no demonstrations for: {what}")
        self.what = what


class EmptyFeedback(ExplainLoopError):
    """User feedback was empty after trimming; re-prompt instead of calling the model."""


class MalformedDemoStore(ExplainLoopError):
    """Demo store file violates the declared demo-count contract."""


# -- model gateway -----------------------------------------------------------


class GatewayError(ExplainLoopError):
    """Base for model-call failures."""


class CassetteMiss(GatewayError):
    def __init__(self, fingerprint: str):
        super().__init__(f"no recorded completion for fingerprint {fingerprint}")
        self.fingerprint = fingerprint


class ProviderError(GatewayError):
    def __init__(self, status: int, body_excerpt: str):
        super().__init__(f"provider returned status {status}: {body_excerpt[:200]}")
        self.status = status
        self.body_excerpt = body_excerpt


class GatewayTimeout(GatewayError):
    def __init__(self, elapsed_ms: int):
        super().__init__(f"model call timed out after {elapsed_ms} ms")
        self.elapsed_ms = elapsed_ms


# -- session engine ----------------------------------------------------------


class InvalidState(ExplainLoopError):
    def __init__(self, state: str, event: str):
        super().__init__(f"event {event!r} is not legal in state {state!r}")
        self.state = state
        self.event = event


class DeadlineExceeded(ExplainLoopError):
    """Session deadline passed; the session has been finalized as timed out."""


# -- metrics -----------------------------------------------------------------


class UnknownTask(ExplainLoopError):
    def __init__(self, session_id: str, task_id: str):
        super().__init__(f"session {session_id} references unknown task {task_id!r}")
        self.session_id = session_id
        self.task_id = task_id


class DanglingAnnotation(ExplainLoopError):
    def __init__(self, session_id: str):
        super().__init__(f"annotation references unknown session {session_id!r}")
        self.session_id = session_id
