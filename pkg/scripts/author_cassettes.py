#!/usr/bin/env python3
"""Regenerate the fixture cassettes under fixtures/cassettes/.

Each cassette is produced by running the real session engine in record mode
against a scripted transport that plays the model's part, so every recorded
fingerprint is exactly what replaying the same session will ask for.  The
scripted responses are frozen here; rerunning the script after editing
demos, manifests, or fixture databases refreshes the cassettes to match.

Run from the repo root:  python3 scripts/author_cassettes.py
"""

from __future__ import annotations

import sys
from collections import deque
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from explainloop.batch import SteppingClock, sequential_ids
from explainloop.gateway import Cassette, Gateway, GatewayMode, ModelConfig
from explainloop.session import SessionEngine, SessionMode
from explainloop.tasks import load_corpus

CASSETTE_DIR = ROOT / "fixtures" / "cassettes"


def record_session(
    cassette_path: Path,
    task,
    mode: SessionMode,
    replies: list[str],
    feedbacks: list[str],
) -> None:
    queue = deque(replies)

    def scripted_transport(payload: dict, config: ModelConfig) -> str:
        if not queue:
            raise RuntimeError(
                f"script exhausted for {task.task_id}; a prompt went unplanned"
            )
        return queue.popleft()

    gateway = Gateway(cassette=Cassette(cassette_path), transport=scripted_transport)
    engine = SessionEngine(
        gateway=gateway,
        gateway_mode=GatewayMode.RECORD_THEN_REPLAY,
        clock=SteppingClock(),
        id_factory=sequential_ids("record"),
    )
    session = engine.start_session(task, mode)
    if session.last_error:
        raise RuntimeError(f"{task.task_id}: {session.last_error}")
    for feedback in feedbacks:
        session = engine.submit_feedback(session.session_id, feedback)
        if session.last_error:
            raise RuntimeError(f"{task.task_id}: {session.last_error}")
    if queue:
        raise RuntimeError(f"{task.task_id}: {len(queue)} scripted replies unused")


def main() -> None:
    sql_tasks = {t.task_id: t for t in load_corpus(ROOT / "fixtures" / "sql")}
    py_tasks = {t.task_id: t for t in load_corpus(ROOT / "fixtures" / "python")}
    CASSETTE_DIR.mkdir(parents=True, exist_ok=True)

    # -- guided SQL: wrong column set first, fixed after feedback ------------
    guided_sql = CASSETTE_DIR / "guided_sql.jsonl"
    guided_sql.unlink(missing_ok=True)
    record_session(
        guided_sql,
        sql_tasks["sql-001"],
        SessionMode.GUIDED,
        replies=[
            "```sql\nSELECT ID, grade FROM Highschooler\n```",
            "What is the ID and grade of each high schooler?",
            "```sql\nSELECT grade FROM Highschooler\n```",
            "What is the grade of each high schooler?",
        ],
        feedbacks=["I only need the grade, not the ID."],
    )

    # -- guided Python: needless sort dropped after feedback -----------------
    guided_python = CASSETTE_DIR / "guided_python.jsonl"
    guided_python.unlink(missing_ok=True)
    record_session(
        guided_python,
        py_tasks["py-004"],
        SessionMode.GUIDED,
        replies=[
            "```python\ndef kth_element(arr, k):\n    arr.sort()\n    return arr[k - 1]\n```",
            "This program finds the kth smallest element in an array. "
            "It first sorts the array in ascending order. Then, it returns "
            "the element at the k-1 index position from the sorted array, "
            "which represents the kth smallest element.",
            "```python\ndef kth_element(arr, k):\n    return arr[k - 1]\n```",
            "This program finds the kth element in an array. It returns the "
            "element at the k-1 index position from the array as given, "
            "without changing the order of the elements.",
        ],
        feedbacks=["The array does not need to be sorted."],
    )

    # -- vanilla free chat on the same SQL task -------------------------------
    vanilla = CASSETTE_DIR / "vanilla.jsonl"
    vanilla.unlink(missing_ok=True)
    record_session(
        vanilla,
        sql_tasks["sql-001"],
        SessionMode.VANILLA,
        replies=[
            "Sure! You can get every student's grade with:\n\n"
            "```sql\nSELECT ID, grade FROM Highschooler\n```\n\n"
            "This lists the ID and grade columns for each row.",
            "Good catch — if you only need the grade column, drop the ID:\n\n"
            "```sql\nSELECT grade FROM Highschooler\n```",
        ],
        feedbacks=["I only need the grade column."],
    )

    # -- batch corpus: straight gold answers, no feedback ---------------------
    batch = CASSETTE_DIR / "batch.jsonl"
    batch.unlink(missing_ok=True)
    straight_sql = {
        "sql-002": ("SELECT name FROM Highschooler",
                    "What are the names of all the high schoolers?"),
        "sql-003": ("SELECT COUNT(*) FROM Highschooler",
                    "How many high schoolers are there in total?"),
        "sql-008": ("SELECT COUNT(*) FROM singer",
                    "How many singers are there?"),
        "sql-009": ("SELECT Name FROM singer ORDER BY Age DESC",
                    "What are the names of the singers, from the oldest to the youngest?"),
        "sql-013": ("SELECT Name FROM stadium ORDER BY Capacity DESC LIMIT 1",
                    "Which stadium has the largest capacity?"),
    }
    for task_id, (code, restated) in straight_sql.items():
        record_session(
            batch,
            sql_tasks[task_id],
            SessionMode.GUIDED,
            replies=[f"```sql\n{code}\n```", restated],
            feedbacks=[],
        )
    straight_python = {
        "py-001": (
            "def round_num(n, m):\n    return (n + m // 2) // m * m",
            "This program rounds a number to the nearest multiple of another "
            "number. It adds half of the chosen multiple to the number, then "
            "uses whole-number division to snap the result down to the "
            "closest multiple.",
        ),
        "py-012": (
            "def is_palindrome(s):\n    return s == s[::-1]",
            "This program checks whether a piece of text reads the same "
            "forwards and backwards. It compares the text with its reversed "
            "copy and returns True when they are identical, and False "
            "otherwise.",
        ),
        "py-013": (
            "def find_min(nums):\n    return min(nums)",
            "This program finds the smallest number in a list by comparing "
            "all of the values and returning the lowest one.",
        ),
    }
    for task_id, (code, description) in straight_python.items():
        record_session(
            batch,
            py_tasks[task_id],
            SessionMode.GUIDED,
            replies=[f"```python\n{code}\n```", description],
            feedbacks=[],
        )

    for path in sorted(CASSETTE_DIR.glob("*.jsonl")):
        count = len(Cassette(path))
        print(f"{path.relative_to(ROOT)}: {count} records", file=sys.stderr)


if __name__ == "__main__":
    main()
