#!/usr/bin/env python3
"""Author the synthetic 10-session transcript fixture for metrics tests.

Hand-built composition (all against the SQL fixture corpus):
3 completed successes, 2 completed failures, 2 unsolvable skips,
2 timeouts, 1 unclear-question skip.  Scoring by hand:
success_rate = 3/9 (the unclear skip is excluded), excluded_count = 1.

Also writes the matching feedback-annotation fixture.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from explainloop.transcript import TranscriptEvent, TranscriptWriter

LOG_DIR = ROOT / "fixtures" / "logs"

# (session_id, task_id, turn0 code, feedbacks, terminal kind, success, elapsed_ms)
SESSIONS = [
    ("syn-01", "sql-001", "SELECT grade FROM Highschooler",
     ["Order them by grade."], "CompletedByUser", True, 60_000),
    ("syn-02", "sql-002", "SELECT name FROM Highschooler",
     [], "CompletedByUser", True, 45_000),
    ("syn-03", "sql-008", "SELECT COUNT(*) FROM singer",
     [], "CompletedByUser", True, 90_000),
    ("syn-04", "sql-004", "SELECT name FROM Highschooler",
     ["Exclude students who have friends.", "Use the Friend table."],
     "CompletedByUser", False, 120_000),
    ("syn-05", "sql-006", "SELECT grade FROM Highschooler",
     ["I asked for a count per grade."], "SkipUnsolvable", False, 180_000),
    ("syn-06", "sql-010", "SELECT AVG(Capacity) FROM stadium",
     [], "Timeout", False, 300_000),
    ("syn-07", "sql-013", "SELECT Name FROM stadium",
     ["Only the one with the largest capacity."], "CompletedByUser", False, 150_000),
    ("syn-08", "sql-019", "SELECT Name FROM country",
     [], "SkipUnsolvable", False, 240_000),
    ("syn-09", "sql-012", "SELECT Name FROM stadium",
     [], "Timeout", False, 301_000),
    ("syn-10", "sql-003", "SELECT grade FROM Highschooler",
     [], "SkipUnclear", False, 30_000),
]

ANNOTATIONS = [
    {"session_id": "syn-01", "turn_index": 0,
     "kind": "InstructionForErrorCorrection", "accurate": True,
     "complete": True, "annotator": "a1"},
    {"session_id": "syn-04", "turn_index": 0,
     "kind": "InstructionForErrorCorrection", "accurate": True,
     "complete": False, "annotator": "a1"},
    {"session_id": "syn-04", "turn_index": 1,
     "kind": "InstructionForErrorCorrection", "accurate": False,
     "complete": None, "annotator": "a2"},
    {"session_id": "syn-05", "turn_index": 0,
     "kind": "QuestionRephrasing", "accurate": True,
     "complete": True, "annotator": "a1"},
    {"session_id": "syn-07", "turn_index": 0,
     "kind": "InputOutputSamples", "accurate": False,
     "complete": None, "annotator": "a2"},
]

TERMINAL_STATE = {
    "CompletedByUser": "Completed",
    "SkipUnclear": "SkippedUnclearQuestion",
    "SkipUnsolvable": "SkippedUnsolvable",
    "Timeout": "TimedOut",
}


def main() -> None:
    LOG_DIR.mkdir(parents=True, exist_ok=True)
    log_path = LOG_DIR / "synthetic10.jsonl"
    log_path.unlink(missing_ok=True)
    writer = TranscriptWriter(log_path)

    base_ms = 1_700_000_000_000
    for offset, (sid, task_id, code, feedbacks, kind, success, elapsed) in enumerate(
        SESSIONS
    ):
        started = base_ms + offset * 400_000

        def emit(event_kind: str, at: int, payload: dict) -> None:
            writer.emit(TranscriptEvent(event_kind, at, sid, payload))

        emit("session_created", started, {
            "task_id": task_id, "mode": "guided",
            "deadline_ms": 300_000, "started_at": started,
        })
        emit("turn_added", started + 5_000, {
            "index": 0, "code": code, "explanation": "stubbed explanation",
            "model_reply": f"```sql\n{code}\n```",
            "execution": {"status": "Ok", "sql_rows": [], "case_results": []},
            "verdict": {"success": success and not feedbacks,
                        "reason": "ResultsMatch" if success and not feedbacks
                        else "ResultsDiffer"},
            "prompts_used": [],
        })
        for turn_index, feedback in enumerate(feedbacks):
            at = started + 10_000 + 20_000 * turn_index
            emit("feedback", at, {"turn_index": turn_index, "text": feedback})
            emit("turn_added", at + 5_000, {
                "index": turn_index + 1, "code": code,
                "explanation": "stubbed explanation",
                "model_reply": f"```sql\n{code}\n```",
                "execution": {"status": "Ok", "sql_rows": [], "case_results": []},
                "verdict": {"success": success, "reason":
                            "ResultsMatch" if success else "ResultsDiffer"},
                "prompts_used": [],
            })
        emit("terminal", started + elapsed, {
            "kind": kind,
            "final_verdict": {"success": success,
                              "reason": "ResultsMatch" if success else "ResultsDiffer"},
            "elapsed_ms": elapsed,
            "state": TERMINAL_STATE[kind],
        })

    annotations_path = LOG_DIR / "annotations.jsonl"
    with annotations_path.open("w") as fh:
        for record in ANNOTATIONS:
            fh.write(json.dumps(record) + "\n")

    print(f"wrote {log_path.relative_to(ROOT)} "
          f"({len(SESSIONS)} sessions) and {annotations_path.relative_to(ROOT)}",
          file=sys.stderr)


if __name__ == "__main__":
    main()
