import hashlib
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from explainloop.sandbox import (
    DEFAULT_PYTHON_CASE_LIMIT_MS,
    DEFAULT_SQL_LIMIT_MS,
    ExecStatus,
    ExecutionOutcome,
    SuccessVerdict,
    VerdictReason,
    judge_python,
    judge_sql,
    run_python,
    run_sql,
)


@pytest.fixture(scope="module")
def hs_db(fixtures_dir):
    return fixtures_dir / "sql" / "db" / "highschooler.sqlite"


def sql_outcome(rows, status=ExecStatus.OK) -> ExecutionOutcome:
    return ExecutionOutcome(status=status, sql_rows=tuple(tuple(r) for r in rows))


class TestRunSql:
    def test_known_rows(self, hs_db):
        out = run_sql("SELECT grade FROM Highschooler", hs_db)
        assert out.status is ExecStatus.OK
        assert out.sql_rows == ((9,), (10,), (12,))

    def test_default_limits_are_ten_seconds(self):
        assert DEFAULT_SQL_LIMIT_MS == 10_000
        assert DEFAULT_PYTHON_CASE_LIMIT_MS == 10_000

    def test_missing_database_is_setup_error(self, tmp_path):
        out = run_sql("SELECT 1", tmp_path / "nope.sqlite")
        assert out.status is ExecStatus.SETUP_ERROR
        assert out.stderr_excerpt

    def test_bad_sql_is_runtime_error(self, hs_db):
        out = run_sql("SELECT definitely_not_a_column FROM Highschooler", hs_db)
        assert out.status is ExecStatus.RUNTIME_ERROR
        assert "definitely_not_a_column" in out.stderr_excerpt

    def test_write_statement_rejected(self, hs_db):
        out = run_sql("INSERT INTO Highschooler VALUES (99, 'Eve', 11)", hs_db)
        assert out.status in (ExecStatus.RUNTIME_ERROR, ExecStatus.SETUP_ERROR)

    def test_database_file_never_modified(self, hs_db):
        before = hashlib.sha256(hs_db.read_bytes()).hexdigest()
        run_sql("SELECT * FROM Highschooler", hs_db)
        run_sql("INSERT INTO Highschooler VALUES (99, 'Eve', 11)", hs_db)
        run_sql("DROP TABLE Highschooler", hs_db)
        run_sql("not even sql", hs_db)
        after = hashlib.sha256(hs_db.read_bytes()).hexdigest()
        assert before == after

    def test_runaway_query_times_out_promptly(self, hs_db):
        # cartesian blowup over a recursive CTE; must be cut at the limit
        runaway = (
            "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM c) "
            "SELECT count(*) FROM c"
        )
        started = time.monotonic()
        out = run_sql(runaway, hs_db, limit_ms=1500)
        elapsed = time.monotonic() - started
        assert out.status is ExecStatus.TIMEOUT
        assert out.wall_ms >= 1500
        assert elapsed < 1500 / 1000 + 1.0  # limit plus a second of slack


class TestJudgeSql:
    GOLD_UNORDERED = "SELECT grade FROM Highschooler"
    GOLD_ORDERED = "SELECT name FROM Highschooler ORDER BY grade"

    def test_exact_match(self):
        verdict = judge_sql(
            sql_outcome([(9,), (10,), (12,)]),
            sql_outcome([(9,), (10,), (12,)]),
            self.GOLD_UNORDERED,
        )
        assert verdict == SuccessVerdict(True, VerdictReason.RESULTS_MATCH)

    def test_permutation_matches_without_order_by(self):
        verdict = judge_sql(
            sql_outcome([(12,), (9,), (10,)]),
            sql_outcome([(9,), (10,), (12,)]),
            self.GOLD_UNORDERED,
        )
        assert verdict.success

    def test_permutation_fails_with_order_by(self):
        verdict = judge_sql(
            sql_outcome([("Casey",), ("Kyle",), ("Jordan",)]),
            sql_outcome([("Kyle",), ("Jordan",), ("Casey",)]),
            self.GOLD_ORDERED,
        )
        assert verdict == SuccessVerdict(False, VerdictReason.RESULTS_DIFFER)

    def test_multiset_respects_duplicates(self):
        verdict = judge_sql(
            sql_outcome([(9,), (9,), (10,)]),
            sql_outcome([(9,), (10,), (10,)]),
            self.GOLD_UNORDERED,
        )
        assert not verdict.success

    def test_arity_mismatch_differs(self):
        verdict = judge_sql(
            sql_outcome([(9, "Kyle")]),
            sql_outcome([(9,)]),
            self.GOLD_UNORDERED,
        )
        assert not verdict.success

    def test_numeric_tolerance(self):
        verdict = judge_sql(
            sql_outcome([(0.3333333334,)]),
            sql_outcome([(0.3333333333,)]),
            self.GOLD_UNORDERED,
        )
        assert verdict.success

    def test_numeric_beyond_tolerance(self):
        verdict = judge_sql(
            sql_outcome([(0.34,)]),
            sql_outcome([(0.33,)]),
            self.GOLD_UNORDERED,
        )
        assert not verdict.success

    def test_int_float_equivalence(self):
        verdict = judge_sql(
            sql_outcome([(3,)]), sql_outcome([(3.0,)]), self.GOLD_UNORDERED
        )
        assert verdict.success

    def test_text_number_type_mismatch(self):
        verdict = judge_sql(
            sql_outcome([("3",)]), sql_outcome([(3,)]), self.GOLD_UNORDERED
        )
        assert not verdict.success

    def test_pred_error_is_execution_failed(self):
        verdict = judge_sql(
            ExecutionOutcome(status=ExecStatus.RUNTIME_ERROR),
            sql_outcome([(1,)]),
            self.GOLD_UNORDERED,
        )
        assert verdict == SuccessVerdict(False, VerdictReason.EXECUTION_FAILED)

    def test_pred_timeout_is_timed_out(self):
        verdict = judge_sql(
            ExecutionOutcome(status=ExecStatus.TIMEOUT),
            sql_outcome([(1,)]),
            self.GOLD_UNORDERED,
        )
        assert verdict == SuccessVerdict(False, VerdictReason.TIMED_OUT)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(
        st.tuples(st.integers(-5, 5), st.text(max_size=4)),
        min_size=0, max_size=6,
    ), st.randoms())
    def test_any_permutation_matches_unordered(self, rows, rng):
        shuffled = list(rows)
        rng.shuffle(shuffled)
        verdict = judge_sql(
            sql_outcome(shuffled), sql_outcome(rows), self.GOLD_UNORDERED
        )
        assert verdict.success


class TestRunPython:
    def test_all_cases_pass(self):
        code = "def double(x):\n    return 2 * x"
        out = run_python(code, ["assert double(2) == 4", "assert double(0) == 0"])
        assert out.status is ExecStatus.OK
        assert [c.passed for c in out.case_results] == [True, True]

    def test_failing_case_reports_detail(self):
        code = "def double(x):\n    return 3 * x"
        out = run_python(code, ["assert double(2) == 4"])
        assert out.status is ExecStatus.OK  # it ran; the assertion failed
        case = out.case_results[0]
        assert not case.passed
        assert "AssertionError" in case.detail

    def test_each_case_is_isolated(self):
        # state mutated by case 1 must not leak into case 2
        code = "registry = []\ndef add(x):\n    registry.append(x)\n    return len(registry)"
        out = run_python(code, ["assert add(1) == 1", "assert add(1) == 1"])
        assert [c.passed for c in out.case_results] == [True, True]

    def test_timeout_per_case(self):
        code = "def spin():\n    while True:\n        pass"
        started = time.monotonic()
        out = run_python(code, ["assert spin() is None"], per_case_limit_ms=1500)
        elapsed = time.monotonic() - started
        assert out.status is ExecStatus.TIMEOUT
        assert out.case_results[0].detail == "timeout"
        assert elapsed < 1.5 + 2.0

    def test_missing_interpreter_is_setup_error(self):
        out = run_python("x = 1", ["assert x"], interpreter="/nonexistent/python9")
        assert out.status is ExecStatus.SETUP_ERROR

    def test_network_is_denied(self):
        code = (
            "import socket\n"
            "def probe():\n"
            "    try:\n"
            "        socket.create_connection(('127.0.0.1', 9), timeout=1)\n"
            "        return 'connected'\n"
            "    except PermissionError:\n"
            "        return 'denied'\n"
        )
        out = run_python(code, ["assert probe() == 'denied'"])
        assert out.status is ExecStatus.OK
        assert out.case_results[0].passed

    def test_writes_outside_scratch_denied(self, tmp_path):
        target = tmp_path / "escape.txt"
        code = (
            "def escape():\n"
            f"    try:\n"
            f"        open({str(target)!r}, 'w')\n"
            f"        return 'wrote'\n"
            f"    except PermissionError:\n"
            f"        return 'denied'\n"
        )
        out = run_python(code, ["assert escape() == 'denied'"])
        assert out.case_results[0].passed
        assert not target.exists()

    def test_writes_inside_scratch_allowed(self):
        code = (
            "def scribble():\n"
            "    with open('notes.txt', 'w') as fh:\n"
            "        fh.write('ok')\n"
            "    return open('notes.txt').read()\n"
        )
        out = run_python(code, ["assert scribble() == 'ok'"])
        assert out.case_results[0].passed


class TestJudgePython:
    def test_all_passed(self):
        out = ExecutionOutcome(
            status=ExecStatus.OK,
            case_results=(_case(0, True), _case(1, True)),
        )
        assert judge_python(out) == SuccessVerdict(True, VerdictReason.ALL_CASES_PASSED)

    def test_one_failure(self):
        out = ExecutionOutcome(
            status=ExecStatus.OK,
            case_results=(_case(0, True), _case(1, False)),
        )
        assert judge_python(out) == SuccessVerdict(False, VerdictReason.CASE_FAILED)

    def test_setup_error(self):
        out = ExecutionOutcome(status=ExecStatus.SETUP_ERROR, stderr_excerpt="boom")
        assert judge_python(out) == SuccessVerdict(
            False, VerdictReason.EXECUTION_FAILED
        )

    def test_timeout(self):
        out = ExecutionOutcome(
            status=ExecStatus.TIMEOUT,
            case_results=(_case(0, False, "timeout"),),
        )
        assert judge_python(out) == SuccessVerdict(False, VerdictReason.TIMED_OUT)


def _case(index, passed, detail=""):
    from explainloop.sandbox import CaseResult

    return CaseResult(index=index, passed=passed, detail=detail)


class TestVerdictInvariants:
    def test_success_reasons_are_exclusive(self):
        with pytest.raises(ValueError):
            SuccessVerdict(True, VerdictReason.RESULTS_DIFFER)
        with pytest.raises(ValueError):
            SuccessVerdict(False, VerdictReason.RESULTS_MATCH)
        with pytest.raises(ValueError):
            SuccessVerdict(False, VerdictReason.ALL_CASES_PASSED)
