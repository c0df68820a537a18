import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from explainloop.cli import main


@pytest.fixture()
def sql_corpus_path(fixtures_dir):
    return str(fixtures_dir / "sql")


@pytest.fixture()
def guided_cassette(fixtures_dir):
    return str(fixtures_dir / "cassettes" / "guided_sql.jsonl")


def run_cli(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


class TestCorpusValidate:
    def test_valid_corpus(self, capsys, sql_corpus_path):
        rc, out, err = run_cli(capsys, "corpus", "validate", "--corpus", sql_corpus_path)
        assert rc == 0
        summary = json.loads(out)
        assert summary["tasks"] == 22
        assert summary["by_language"] == {"sql": 22}

    def test_python_corpus(self, capsys, fixtures_dir):
        rc, out, _ = run_cli(
            capsys, "corpus", "validate", "--corpus", str(fixtures_dir / "python")
        )
        assert rc == 0
        assert json.loads(out)["by_language"] == {"python": 21}

    def test_missing_corpus_fails_with_json_error(self, capsys, tmp_path):
        rc, out, err = run_cli(
            capsys, "corpus", "validate", "--corpus", str(tmp_path / "ghost")
        )
        assert rc == 1
        assert out == ""
        error = json.loads(err)
        assert error["kind"] == "MissingManifest"


class TestReport:
    def test_plain_report_matches_golden(self, capsys, sql_corpus_path,
                                         fixtures_dir, golden_dir):
        rc, out, _ = run_cli(
            capsys, "report",
            "--corpus", sql_corpus_path,
            "--log", str(fixtures_dir / "logs" / "synthetic10.jsonl"),
        )
        assert rc == 0
        assert out == (golden_dir / "report_plain.txt").read_text()
        assert "0.3333" in out

    def test_tsv_report_matches_golden(self, capsys, sql_corpus_path,
                                       fixtures_dir, golden_dir):
        rc, out, _ = run_cli(
            capsys, "report",
            "--corpus", sql_corpus_path,
            "--log", str(fixtures_dir / "logs" / "synthetic10.jsonl"),
            "--report-format", "tsv",
        )
        assert rc == 0
        assert out == (golden_dir / "report_tsv.txt").read_text()

    def test_missing_log_fails(self, capsys, sql_corpus_path, tmp_path):
        rc, _, err = run_cli(
            capsys, "report",
            "--corpus", sql_corpus_path,
            "--log", str(tmp_path / "none.jsonl"),
        )
        assert rc == 1
        assert json.loads(err)["kind"] == "missing-file"


class TestBatch:
    def test_stdout_matches_golden(self, capsys, sql_corpus_path, fixtures_dir,
                                   golden_dir):
        rc, out, _ = run_cli(
            capsys, "batch",
            "--corpus", sql_corpus_path,
            "--runs", str(fixtures_dir / "runs" / "batch_runs.json"),
            "--cassette", str(fixtures_dir / "cassettes" / "batch.jsonl"),
            "--mode", "replay",
        )
        assert rc == 0
        assert out == (golden_dir / "cli_batch_stdout.txt").read_text()

    def test_unknown_task_in_runs_is_nonzero(self, capsys, sql_corpus_path,
                                             fixtures_dir, tmp_path):
        runs = tmp_path / "runs.json"
        runs.write_text(json.dumps([{"task_id": "sql-999"}]))
        rc, out, err = run_cli(
            capsys, "batch",
            "--corpus", sql_corpus_path,
            "--runs", str(runs),
            "--cassette", str(fixtures_dir / "cassettes" / "batch.jsonl"),
            "--mode", "replay",
        )
        assert rc == 1
        assert json.loads(err)["kind"] == "batch-incomplete"
        first_line = json.loads(out.splitlines()[0])
        assert first_line["status"] == "error"

    def test_expectation_mismatch_is_nonzero(self, capsys, sql_corpus_path,
                                             fixtures_dir, tmp_path):
        runs = tmp_path / "runs.json"
        runs.write_text(json.dumps(
            [{"task_id": "sql-002", "expected_terminal": "Timeout"}]
        ))
        rc, _, err = run_cli(
            capsys, "batch",
            "--corpus", sql_corpus_path,
            "--runs", str(runs),
            "--cassette", str(fixtures_dir / "cassettes" / "batch.jsonl"),
            "--mode", "replay",
        )
        assert rc == 1
        assert "expectation mismatch" in json.loads(err)["error"]


class TestSessionRun:
    def test_full_scripted_session(self, capsys, sql_corpus_path, guided_cassette,
                                   tmp_path):
        transcript = tmp_path / "t.jsonl"
        rc, out, _ = run_cli(
            capsys, "session", "run",
            "--corpus", sql_corpus_path,
            "--task-id", "sql-001",
            "--cassette", guided_cassette,
            "--mode", "replay",
            "--feedback", "I only need the grade, not the ID.",
            "--transcript", str(transcript),
        )
        assert rc == 0
        snap = json.loads(out)
        assert snap["state"] == "Completed"
        assert len(snap["turns"]) == 2
        assert snap["outcome"]["final_verdict"]["success"] is True
        lines = transcript.read_text().splitlines()
        assert json.loads(lines[-1])["kind"] == "terminal"

    def test_no_complete_leaves_session_open(self, capsys, sql_corpus_path,
                                             guided_cassette):
        rc, out, _ = run_cli(
            capsys, "session", "run",
            "--corpus", sql_corpus_path,
            "--task-id", "sql-001",
            "--cassette", guided_cassette,
            "--mode", "replay",
            "--no-complete",
        )
        assert rc == 0
        snap = json.loads(out)
        assert snap["state"] == "AwaitingFeedback"
        assert snap["outcome"] is None

    def test_unknown_task(self, capsys, sql_corpus_path, guided_cassette):
        rc, _, err = run_cli(
            capsys, "session", "run",
            "--corpus", sql_corpus_path,
            "--task-id", "sql-404",
            "--cassette", guided_cassette,
        )
        assert rc == 1
        assert json.loads(err)["kind"] == "unknown-task"

    def test_replay_requires_cassette(self, capsys, sql_corpus_path):
        rc, _, err = run_cli(
            capsys, "session", "run",
            "--corpus", sql_corpus_path,
            "--task-id", "sql-001",
            "--mode", "replay",
        )
        assert rc == 1
        assert "--cassette is required" in json.loads(err)["error"]


class TestUsageErrors:
    def test_no_arguments_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_bad_mode_choice_exits_2(self, sql_corpus_path):
        with pytest.raises(SystemExit) as exc:
            main([
                "session", "run",
                "--corpus", sql_corpus_path,
                "--task-id", "sql-001",
                "--mode", "telepathy",
            ])
        assert exc.value.code == 2


class _CannedHandler(BaseHTTPRequestHandler):
    """Always answers with one canned SQL reply, whatever the prompt."""

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        self.rfile.read(length)
        reply = "```sql\nSELECT grade FROM Highschooler\n```"
        payload = json.dumps(
            {"choices": [{"message": {"content": reply}}]}
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def canned_provider():
    server = HTTPServer(("127.0.0.1", 0), _CannedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
    server.shutdown()


class TestCassetteRecord:
    def test_record_then_replay_round_trip(self, capsys, sql_corpus_path,
                                           canned_provider, tmp_path, monkeypatch):
        monkeypatch.setenv("CANNED_KEY", "sk-unused")
        cassette = tmp_path / "recorded.jsonl"
        rc, out, _ = run_cli(
            capsys, "cassette", "record",
            "--corpus", sql_corpus_path,
            "--task-id", "sql-001",
            "--cassette", str(cassette),
            "--endpoint", canned_provider,
            "--credential-env", "CANNED_KEY",
        )
        assert rc == 0
        lines = out.strip().splitlines()
        summary = json.loads(lines[-1])
        # guided session, no feedback: one generation + one explanation call
        assert summary["new_records"] == 2
        assert cassette.exists()

        # the cassette must now drive the same session offline
        rc, out, _ = run_cli(
            capsys, "session", "run",
            "--corpus", sql_corpus_path,
            "--task-id", "sql-001",
            "--cassette", str(cassette),
            "--mode", "replay",
        )
        assert rc == 0
        snap = json.loads(out)
        assert snap["state"] == "Completed"
        assert snap["turns"][0]["code"] == "SELECT grade FROM Highschooler"

    def test_record_without_cassette_fails(self, capsys, sql_corpus_path,
                                           canned_provider):
        rc, _, err = run_cli(
            capsys, "cassette", "record",
            "--corpus", sql_corpus_path,
            "--task-id", "sql-001",
            "--endpoint", canned_provider,
        )
        assert rc == 1
        assert json.loads(err)["kind"] == "usage"
