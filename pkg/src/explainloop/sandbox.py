"""Execution sandbox for generated SQL and Python.

SQL runs against a read-only SQLite connection with a progress-handler
deadline.  Python cases each run in a fresh ``python3 -I`` subprocess whose
working directory is a throwaway scratch dir; a small guard prelude blocks
sockets and file writes outside that dir.  Verdicts are rendered separately
so the session engine can reuse cached gold outcomes.
"""

from __future__ import annotations

import math
import shutil
import sqlite3
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .sqledits import has_top_level_order_by

DEFAULT_SQL_LIMIT_MS = 10_000
DEFAULT_PYTHON_CASE_LIMIT_MS = 10_000
NUMERIC_REL_TOL = 1e-6

# Cap on simultaneously running sandboxes across all sessions.
_MAX_CONCURRENT = 4
_slots = threading.BoundedSemaphore(_MAX_CONCURRENT)


class ExecStatus(str, Enum):
    OK = "Ok"
    RUNTIME_ERROR = "RuntimeError"
    TIMEOUT = "Timeout"
    SETUP_ERROR = "SetupError"


class VerdictReason(str, Enum):
    RESULTS_MATCH = "ResultsMatch"
    RESULTS_DIFFER = "ResultsDiffer"
    EXECUTION_FAILED = "ExecutionFailed"
    ALL_CASES_PASSED = "AllCasesPassed"
    CASE_FAILED = "CaseFailed"
    TIMED_OUT = "TimedOut"

_SUCCESS_REASONS = {VerdictReason.RESULTS_MATCH, VerdictReason.ALL_CASES_PASSED}


@dataclass(frozen=True)
class CaseResult:
    index: int
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ExecutionOutcome:
    status: ExecStatus
    sql_rows: tuple[tuple, ...] = ()
    case_results: tuple[CaseResult, ...] = ()
    stderr_excerpt: str = ""
    wall_ms: int = 0

    def __post_init__(self) -> None:
        if self.wall_ms < 0:
            raise ValueError("wall_ms must be non-negative")


@dataclass(frozen=True)
class SuccessVerdict:
    success: bool
    reason: VerdictReason

    def __post_init__(self) -> None:
        if self.success != (self.reason in _SUCCESS_REASONS):
            raise ValueError("success flag inconsistent with reason")


def _verdict(reason: VerdictReason) -> SuccessVerdict:
    return SuccessVerdict(success=reason in _SUCCESS_REASONS, reason=reason)


# -- SQL ----------------------------------------------------------------------


def run_sql(
    code: str,
    database_ref: str | Path,
    limit_ms: int = DEFAULT_SQL_LIMIT_MS,
) -> ExecutionOutcome:
    if limit_ms <= 0:
        raise ValueError("limit_ms must be positive")
    db_path = Path(database_ref)
    started = time.monotonic()

    def elapsed_ms() -> int:
        return int((time.monotonic() - started) * 1000)

    if not db_path.exists():
        return ExecutionOutcome(
            status=ExecStatus.SETUP_ERROR,
            stderr_excerpt=f"database not found: {db_path}",
            wall_ms=elapsed_ms(),
        )

    with _slots:
        deadline = started + limit_ms / 1000.0
        timed_out = False
        try:
            conn = sqlite3.connect(
                f"file:{db_path}?mode=ro", uri=True, timeout=limit_ms / 1000.0
            )
        except sqlite3.Error as exc:
            return ExecutionOutcome(
                status=ExecStatus.SETUP_ERROR,
                stderr_excerpt=str(exc)[:500],
                wall_ms=elapsed_ms(),
            )
        try:

            def _watchdog():
                nonlocal timed_out
                if time.monotonic() > deadline:
                    timed_out = True
                    return 1  # abort the statement
                return 0

            conn.set_progress_handler(_watchdog, 1000)
            try:
                rows = conn.execute(code).fetchall()
            except sqlite3.OperationalError as exc:
                if timed_out:
                    wall = max(elapsed_ms(), limit_ms)
                    return ExecutionOutcome(
                        status=ExecStatus.TIMEOUT,
                        stderr_excerpt="query exceeded time limit",
                        wall_ms=wall,
                    )
                return ExecutionOutcome(
                    status=ExecStatus.RUNTIME_ERROR,
                    stderr_excerpt=str(exc)[:500],
                    wall_ms=elapsed_ms(),
                )
            except sqlite3.DatabaseError as exc:
                return ExecutionOutcome(
                    status=ExecStatus.SETUP_ERROR,
                    stderr_excerpt=str(exc)[:500],
                    wall_ms=elapsed_ms(),
                )
            return ExecutionOutcome(
                status=ExecStatus.OK,
                sql_rows=tuple(tuple(r) for r in rows),
                wall_ms=elapsed_ms(),
            )
        finally:
            conn.close()


def _values_equal(a, b) -> bool:
    a_num = isinstance(a, (int, float)) and not isinstance(a, bool)
    b_num = isinstance(b, (int, float)) and not isinstance(b, bool)
    if a_num and b_num:
        return math.isclose(a, b, rel_tol=NUMERIC_REL_TOL, abs_tol=0.0)
    return type(a) is type(b) and a == b


def _rows_equal(a: tuple, b: tuple) -> bool:
    return len(a) == len(b) and all(_values_equal(x, y) for x, y in zip(a, b))


def _canonical_key(row: tuple) -> tuple:
    # Stable sort key so tolerant pairwise comparison sees aligned candidates.
    return tuple((repr(type(v)), repr(v)) for v in row)


def _multisets_match(pred: tuple[tuple, ...], gold: tuple[tuple, ...]) -> bool:
    if len(pred) != len(gold):
        return False
    pred_sorted = sorted(pred, key=_canonical_key)
    gold_sorted = sorted(gold, key=_canonical_key)
    return all(_rows_equal(p, g) for p, g in zip(pred_sorted, gold_sorted))


def judge_sql(
    pred_outcome: ExecutionOutcome,
    gold_outcome: ExecutionOutcome,
    gold_code: str,
) -> SuccessVerdict:
    if ExecStatus.TIMEOUT in (pred_outcome.status, gold_outcome.status):
        return _verdict(VerdictReason.TIMED_OUT)
    if pred_outcome.status is not ExecStatus.OK or gold_outcome.status is not ExecStatus.OK:
        return _verdict(VerdictReason.EXECUTION_FAILED)
    if has_top_level_order_by(gold_code):
        same = len(pred_outcome.sql_rows) == len(gold_outcome.sql_rows) and all(
            _rows_equal(p, g)
            for p, g in zip(pred_outcome.sql_rows, gold_outcome.sql_rows)
        )
    else:
        same = _multisets_match(pred_outcome.sql_rows, gold_outcome.sql_rows)
    return _verdict(VerdictReason.RESULTS_MATCH if same else VerdictReason.RESULTS_DIFFER)


# -- Python -------------------------------------------------------------------

# Prelude compiled into every case process.  Cooperative guard: candidate code
# runs under `python3 -I` in a scratch cwd; sockets are refused and write-mode
# opens outside the scratch dir raise before touching the path.
_GUARD_PRELUDE = """\
import builtins, os
_SCRATCH = os.path.realpath(os.getcwd())
_real_open = builtins.open
def _guarded_open(file, mode="r", *args, **kwargs):
    if any(flag in mode for flag in ("w", "a", "x", "+")):
        target = os.path.realpath(os.fspath(file) if not isinstance(file, int) else ".")
        if not target.startswith(_SCRATCH + os.sep) and target != _SCRATCH:
            raise PermissionError(f"sandbox: write outside scratch dir: {file}")
    return _real_open(file, mode, *args, **kwargs)
builtins.open = _guarded_open
try:
    import socket
    def _no_socket(*a, **k):
        raise PermissionError("sandbox: network disabled")
    socket.socket = _no_socket
    socket.create_connection = _no_socket
except ImportError:
    pass
"""


def run_python(
    code: str,
    cases: list[str] | tuple[str, ...],
    per_case_limit_ms: int = DEFAULT_PYTHON_CASE_LIMIT_MS,
    interpreter: str = sys.executable,
) -> ExecutionOutcome:
    if not cases:
        raise ValueError("cases must be non-empty")
    if per_case_limit_ms <= 0:
        raise ValueError("per_case_limit_ms must be positive")
    started = time.monotonic()

    if shutil.which(interpreter) is None and not Path(interpreter).exists():
        return ExecutionOutcome(
            status=ExecStatus.SETUP_ERROR,
            stderr_excerpt=f"interpreter not found: {interpreter}",
            wall_ms=int((time.monotonic() - started) * 1000),
        )

    results: list[CaseResult] = []
    with _slots:
        for index, assertion in enumerate(cases):
            payload = f"{_GUARD_PRELUDE}\n{code}\n{assertion}\n"
            scratch = tempfile.mkdtemp(prefix="xloop-case-")
            try:
                proc = subprocess.run(
                    [interpreter, "-I", "-c", payload],
                    cwd=scratch,
                    capture_output=True,
                    text=True,
                    timeout=per_case_limit_ms / 1000.0,
                )
            except subprocess.TimeoutExpired:
                results.append(CaseResult(index, False, "timeout"))
                continue
            finally:
                shutil.rmtree(scratch, ignore_errors=True)
            if proc.returncode == 0:
                results.append(CaseResult(index, True))
            else:
                detail = (proc.stderr or proc.stdout).strip()[-500:]
                results.append(CaseResult(index, False, detail or "nonzero exit"))

    wall_ms = int((time.monotonic() - started) * 1000)
    failures = [r for r in results if not r.passed]
    if failures and all(r.detail == "timeout" for r in failures):
        status = ExecStatus.TIMEOUT
        wall_ms = max(wall_ms, per_case_limit_ms)
    else:
        status = ExecStatus.OK
    return ExecutionOutcome(
        status=status,
        case_results=tuple(results),
        stderr_excerpt=failures[0].detail if failures else "",
        wall_ms=wall_ms,
    )


def judge_python(outcome: ExecutionOutcome) -> SuccessVerdict:
    if outcome.status is ExecStatus.SETUP_ERROR:
        return _verdict(VerdictReason.EXECUTION_FAILED)
    failures = [r for r in outcome.case_results if not r.passed]
    if not failures:
        return _verdict(VerdictReason.ALL_CASES_PASSED)
    if all(r.detail == "timeout" for r in failures):
        return _verdict(VerdictReason.TIMED_OUT)
    return _verdict(VerdictReason.CASE_FAILED)
