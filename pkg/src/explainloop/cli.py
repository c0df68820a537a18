"""Command-line entry point.

Subcommands:

- ``corpus validate``   load a manifest, report task counts, exit nonzero on
  the first malformed task
- ``session run``       drive one task through a full session (scripted
  feedback optional) against a cassette or the live provider
- ``batch``             execute a runs file of scripted sessions and print a
  metrics report
- ``report``            compute metrics from an existing transcript log
- ``cassette record``   run sessions in record mode to capture completions
- ``serve``             start the HTTP service

Exit codes: 0 success, 1 failure (with one machine-readable JSON error line
on stderr), 2 usage errors.  Credentials are read from the environment
variable named by --credential-env; there is no flag that accepts a secret.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ExplainLoopError
from .gateway import Cassette, Gateway, GatewayMode, ModelConfig
from .metrics import ReportFormat, compute_metrics, render_report
from .prompts import DemoStore
from .session import SessionEngine, SessionMode
from .tasks import load_corpus
from .transcript import TranscriptWriter, read_transcript

_MODE_FOR_FLAG = {
    "live": GatewayMode.LIVE,
    "replay": GatewayMode.REPLAY,
    "record": GatewayMode.RECORD_THEN_REPLAY,
}
_FORMAT_FOR_FLAG = {
    "plain": ReportFormat.PLAIN_TABLE,
    "tsv": ReportFormat.DELIMITED_TEXT,
}


def _fail(message: str, kind: str = "error") -> int:
    print(json.dumps({"error": message, "kind": kind}), file=sys.stderr)
    return 1


def _add_gateway_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cassette", help="cassette JSONL path")
    parser.add_argument(
        "--mode", choices=sorted(_MODE_FOR_FLAG), default="replay",
        help="gateway mode (default: replay)",
    )
    parser.add_argument("--endpoint", default=None, help="provider endpoint URL")
    parser.add_argument("--model", default=None, help="provider model name")
    parser.add_argument(
        "--credential-env", default=None,
        help="environment variable holding the provider credential",
    )


def _build_config(args) -> ModelConfig:
    overrides = {}
    if args.endpoint:
        overrides["endpoint"] = args.endpoint
    if args.model:
        overrides["model_name"] = args.model
    if args.credential_env:
        overrides["credential_ref"] = args.credential_env
    return ModelConfig(**overrides)


def _build_gateway(args) -> tuple[Gateway, GatewayMode]:
    mode = _MODE_FOR_FLAG[args.mode]
    cassette = Cassette(args.cassette) if args.cassette else None
    if mode is not GatewayMode.LIVE and cassette is None:
        raise ExplainLoopError(f"--cassette is required for --mode {args.mode}")
    return Gateway(cassette=cassette), mode


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="explainloop",
        description="conversational code generation with execution-grounded explanations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    corpus_cmd = sub.add_parser("corpus", help="corpus utilities")
    corpus_sub = corpus_cmd.add_subparsers(dest="corpus_command", required=True)
    validate = corpus_sub.add_parser("validate", help="load and validate a corpus")
    validate.add_argument("--corpus", required=True)

    session_cmd = sub.add_parser("session", help="session utilities")
    session_sub = session_cmd.add_subparsers(dest="session_command", required=True)
    run = session_sub.add_parser("run", help="run one task as a full session")
    run.add_argument("--corpus", required=True)
    run.add_argument("--task-id", required=True)
    run.add_argument(
        "--session-mode", choices=[m.value for m in SessionMode],
        default=SessionMode.GUIDED.value,
    )
    run.add_argument("--deadline-ms", type=int, default=300_000)
    run.add_argument(
        "--feedback", action="append", default=[],
        help="scripted feedback, repeatable, sent in order",
    )
    run.add_argument("--transcript", help="write transcript JSONL here")
    run.add_argument("--no-complete", action="store_true",
                     help="leave the session open instead of pressing Complete")
    _add_gateway_args(run)

    batch = sub.add_parser("batch", help="run scripted sessions from a runs file")
    batch.add_argument("--corpus", required=True)
    batch.add_argument("--runs", required=True, help="JSON list of scripted runs")
    batch.add_argument("--transcript", help="write transcript JSONL here")
    batch.add_argument("--deadline-ms", type=int, default=300_000)
    batch.add_argument(
        "--report-format", choices=sorted(_FORMAT_FOR_FLAG), default="plain",
    )
    _add_gateway_args(batch)

    report = sub.add_parser("report", help="metrics from a transcript log")
    report.add_argument("--corpus", required=True)
    report.add_argument("--log", required=True, help="transcript JSONL path")
    report.add_argument(
        "--report-format", choices=sorted(_FORMAT_FOR_FLAG), default="plain",
    )

    cassette_cmd = sub.add_parser("cassette", help="cassette utilities")
    cassette_sub = cassette_cmd.add_subparsers(dest="cassette_command", required=True)
    record = cassette_sub.add_parser(
        "record", help="run sessions in record mode to capture completions"
    )
    record.add_argument("--corpus", required=True)
    record.add_argument("--task-id", required=True)
    record.add_argument("--feedback", action="append", default=[])
    record.add_argument("--deadline-ms", type=int, default=300_000)
    _add_gateway_args(record)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--corpus", required=True)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8321)
    serve.add_argument("--deadline-ms", type=int, default=300_000)
    _add_gateway_args(serve)

    return parser


def _cmd_corpus_validate(args) -> int:
    tasks = load_corpus(args.corpus)
    by_language: dict[str, int] = {}
    for task in tasks:
        by_language[task.language.value] = by_language.get(task.language.value, 0) + 1
    print(json.dumps({"tasks": len(tasks), "by_language": by_language}))
    return 0


def _run_scripted_session(args, gateway_mode_override=None) -> int:
    tasks = load_corpus(args.corpus)
    task = next((t for t in tasks if t.task_id == args.task_id), None)
    if task is None:
        return _fail(f"no such task: {args.task_id}", "unknown-task")
    gateway, mode = _build_gateway(args)
    if gateway_mode_override is not None:
        mode = gateway_mode_override
    engine = SessionEngine(
        gateway=gateway,
        config=_build_config(args),
        gateway_mode=mode,
        transcript=TranscriptWriter(getattr(args, "transcript", None)),
        deadline_ms=args.deadline_ms,
    )
    session = engine.start_session(task, SessionMode(getattr(args, "session_mode", "guided")))
    for feedback in args.feedback:
        if session.is_terminal:
            break
        session = engine.submit_feedback(session.session_id, feedback)
    if not session.is_terminal and not getattr(args, "no_complete", False):
        session = engine.complete_session(session.session_id)
    print(json.dumps(engine.snapshot(session.session_id), indent=2))
    return 0


def _cmd_batch(args) -> int:
    from .batch import ScriptedRun, run_batch

    tasks = load_corpus(args.corpus)
    raw = json.loads(Path(args.runs).read_text())
    runs = [
        ScriptedRun(
            task_id=r["task_id"],
            mode=SessionMode(r.get("mode", "guided")),
            scripted_feedback=tuple(r.get("scripted_feedback", [])),
            expected_terminal=r.get("expected_terminal"),
        )
        for r in raw
    ]
    gateway, mode = _build_gateway(args)
    transcript, report, results = run_batch(
        runs,
        tasks,
        gateway,
        gateway_mode=mode,
        config=_build_config(args),
        transcript_path=args.transcript,
        deadline_ms=args.deadline_ms,
    )
    for result in results:
        print(json.dumps(result.__dict__))
    print(render_report(report, _FORMAT_FOR_FLAG[args.report_format]), end="")
    errors = [r for r in results if r.status == "error"]
    mismatches = [r for r in results if r.matched_expectation is False]
    if errors or mismatches:
        return _fail(
            f"{len(errors)} run error(s), {len(mismatches)} expectation mismatch(es)",
            "batch-incomplete",
        )
    return 0


def _cmd_report(args) -> int:
    tasks = load_corpus(args.corpus)
    events = read_transcript(args.log)
    report = compute_metrics(events, tasks)
    print(render_report(report, _FORMAT_FOR_FLAG[args.report_format]), end="")
    return 0


def _cmd_cassette_record(args) -> int:
    if not args.cassette:
        return _fail("--cassette is required for recording", "usage")
    cassette = Cassette(args.cassette)
    before = len(cassette)
    args.mode = "record"
    rc = _run_scripted_session(args, GatewayMode.RECORD_THEN_REPLAY)
    if rc != 0:
        return rc
    after = len(Cassette(args.cassette))
    print(json.dumps({"cassette": args.cassette, "new_records": after - before}))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    tasks = load_corpus(args.corpus)
    gateway, mode = _build_gateway(args)
    engine = SessionEngine(
        gateway=gateway,
        config=_build_config(args),
        gateway_mode=mode,
        deadline_ms=args.deadline_ms,
    )
    app = create_app(engine, tasks)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "corpus":
            return _cmd_corpus_validate(args)
        if args.command == "session":
            return _run_scripted_session(args)
        if args.command == "batch":
            return _cmd_batch(args)
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "cassette":
            return _cmd_cassette_record(args)
        if args.command == "serve":
            return _cmd_serve(args)
        parser.error(f"unknown command {args.command!r}")
    except ExplainLoopError as exc:
        return _fail(str(exc), type(exc).__name__)
    except FileNotFoundError as exc:
        return _fail(str(exc), "missing-file")
    return 2


if __name__ == "__main__":
    sys.exit(main())
