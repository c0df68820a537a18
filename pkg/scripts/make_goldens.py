#!/usr/bin/env python3
"""Record the golden files under tests/golden/.

Goldens freeze observable contracts: prompt renderings, the cassette record
format, the session snapshot JSON shape, the scripted-session transcript,
and metric report renderings.  They are recorded once and compared
byte-for-byte in tests; rerun this script only when a contract change is
intended, and review the diff.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from explainloop.batch import SteppingClock, sequential_ids
from explainloop.gateway import Cassette, replay_gateway, GatewayMode
from explainloop.metrics import ReportFormat, compute_metrics, render_report
from explainloop.prompts import (
    DemoStore,
    Message,
    Role,
    build_codegen_prompt,
    build_correction_prompt,
    build_description_prompt,
    build_restatement_prompt,
    build_vanilla_prompt,
)
from explainloop.session import SessionEngine, SessionMode
from explainloop.tasks import load_corpus
from explainloop.transcript import TranscriptWriter, read_transcript

GOLDEN = ROOT / "tests" / "golden"


def write(name: str, text: str) -> None:
    path = GOLDEN / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path.relative_to(ROOT)}", file=sys.stderr)


def main() -> None:
    store = DemoStore.load_default()
    sql_tasks = {t.task_id: t for t in load_corpus(ROOT / "fixtures" / "sql")}
    py_tasks = {t.task_id: t for t in load_corpus(ROOT / "fixtures" / "python")}
    sql_task = sql_tasks["sql-001"]
    py_task = py_tasks["py-004"]

    # prompt renderings
    write("prompt_codegen_sql.txt", build_codegen_prompt(sql_task, store).rendered())
    write("prompt_codegen_python.txt", build_codegen_prompt(py_task, store).rendered())
    write(
        "prompt_restatement.txt",
        build_restatement_prompt(
            "SELECT grade FROM Highschooler", sql_task.question, store
        ).rendered(),
    )
    write(
        "prompt_description.txt",
        build_description_prompt(py_tasks["py-005"].gold_code, store).rendered(),
    )
    write(
        "prompt_correction_sql.txt",
        build_correction_prompt(
            code="SELECT ID, grade FROM Highschooler",
            explanation="What is the ID and grade of each high schooler?",
            feedback="I only need the grade, not the ID.",
            task=sql_task,
            store=store,
        ).rendered(),
    )
    write(
        "prompt_vanilla.txt",
        build_vanilla_prompt(
            [
                Message(Role.USER, "How do I list every grade?"),
                Message(Role.ASSISTANT, "Use SELECT grade FROM Highschooler."),
                Message(Role.USER, "Only unique values, please."),
            ]
        ).rendered(),
    )

    # cassette record format (first record of the guided SQL cassette)
    cassette = Cassette(ROOT / "fixtures" / "cassettes" / "guided_sql.jsonl")
    first_line = (
        (ROOT / "fixtures" / "cassettes" / "guided_sql.jsonl")
        .read_text()
        .splitlines()[0]
    )
    write("cassette_record.json", json.dumps(json.loads(first_line), indent=2) + "\n")

    # scripted guided session: transcript + final snapshot
    transcript = TranscriptWriter()
    engine = SessionEngine(
        gateway=replay_gateway(ROOT / "fixtures" / "cassettes" / "guided_sql.jsonl"),
        gateway_mode=GatewayMode.REPLAY,
        transcript=transcript,
        clock=SteppingClock(),
        id_factory=sequential_ids("s"),
    )
    session = engine.start_session(sql_task, SessionMode.GUIDED)
    engine.submit_feedback(session.session_id, "I only need the grade, not the ID.")
    engine.complete_session(session.session_id)
    write("transcript_guided_sql.jsonl", transcript.rendered())
    write(
        "api_session_snapshot.json",
        json.dumps(engine.snapshot(session.session_id), indent=2) + "\n",
    )

    # metric report renderings from the synthetic 10-session log
    corpus = load_corpus(ROOT / "fixtures" / "sql")
    events = read_transcript(ROOT / "fixtures" / "logs" / "synthetic10.jsonl")
    report = compute_metrics(events, corpus)
    write("report_plain.txt", render_report(report, ReportFormat.PLAIN_TABLE))
    write("report_tsv.txt", render_report(report, ReportFormat.DELIMITED_TEXT))

    # CLI batch stdout over the fixture runs file
    import contextlib
    import io

    from explainloop.cli import main as cli_main

    buffer = io.StringIO()
    with contextlib.redirect_stdout(buffer):
        rc = cli_main(
            [
                "batch",
                "--corpus", str(ROOT / "fixtures" / "sql"),
                "--runs", str(ROOT / "fixtures" / "runs" / "batch_runs.json"),
                "--cassette", str(ROOT / "fixtures" / "cassettes" / "batch.jsonl"),
                "--mode", "replay",
            ]
        )
    if rc != 0:
        raise RuntimeError(f"cli batch exited {rc}")
    write("cli_batch_stdout.txt", buffer.getvalue())


if __name__ == "__main__":
    main()
