"""Evaluation harness: micro-averaged success/time metrics from transcript
logs, plus aggregation of human feedback annotations.

Scoring rules:

- a session succeeds iff its terminal final_verdict.success is true;
- SkipUnclearQuestion sessions are excluded from every denominator;
- SkipUnsolvable and Timeout sessions count as failures, with their elapsed
  time included in the time average;
- reported spreads are population standard deviations over the per-session
  success indicators / elapsed times.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import DanglingAnnotation, UnknownTask
from .tasks import Difficulty, TaskBundle, classify_difficulty
from .transcript import TranscriptEvent, group_by_session


@dataclass(frozen=True)
class SessionDigest:
    """One finished session, as reconstructed from its transcript events."""

    session_id: str
    task_id: str
    mode: str
    terminal_kind: str
    success: bool
    elapsed_ms: int
    first_code: str
    feedback_texts: tuple[str, ...] = ()


@dataclass(frozen=True)
class RateWithSpread:
    mean: float | None
    spread: float | None


@dataclass(frozen=True)
class DifficultySlice:
    n_sessions: int
    success_rate: RateWithSpread
    avg_time_ms: RateWithSpread


@dataclass(frozen=True)
class MetricsReport:
    success_rate: RateWithSpread
    avg_time_ms: RateWithSpread
    per_difficulty: dict[Difficulty, DifficultySlice]
    excluded_count: int
    n_sessions: int


class FeedbackKind(str, Enum):
    INSTRUCTION_FOR_ERROR_CORRECTION = "InstructionForErrorCorrection"
    QUESTION_REPHRASING = "QuestionRephrasing"
    INPUT_OUTPUT_SAMPLES = "InputOutputSamples"
    SELF_DEBUG = "SelfDebug"
    STEP_BY_STEP_INSTRUCTIONS = "StepByStepInstructions"


@dataclass(frozen=True)
class FeedbackAnnotation:
    session_id: str
    turn_index: int
    kind: FeedbackKind
    accurate: bool | None = None
    complete: bool | None = None
    annotator: str = ""

    def __post_init__(self) -> None:
        if self.complete is not None and self.accurate is not True:
            raise ValueError("complete may be set only when accurate is true")


def digest_sessions(events: Iterable[TranscriptEvent]) -> list[SessionDigest]:
    """Collapse raw transcript events into one digest per finished session.

    Sessions without a terminal event (still running, or a truncated log)
    are dropped: there is nothing to score yet.
    """
    digests = []
    for session_id, session_events in group_by_session(events).items():
        created = next(
            (e for e in session_events if e.kind == "session_created"), None
        )
        terminal = next((e for e in session_events if e.kind == "terminal"), None)
        if created is None or terminal is None:
            continue
        first_turn = next((e for e in session_events if e.kind == "turn_added"), None)
        feedback = tuple(
            e.payload.get("text", "")
            for e in session_events
            if e.kind == "feedback"
        )
        digests.append(
            SessionDigest(
                session_id=session_id,
                task_id=created.payload["task_id"],
                mode=created.payload.get("mode", ""),
                terminal_kind=terminal.payload["kind"],
                success=bool(terminal.payload["final_verdict"]["success"]),
                elapsed_ms=int(terminal.payload["elapsed_ms"]),
                first_code=(first_turn.payload.get("code", "") if first_turn else ""),
                feedback_texts=feedback,
            )
        )
    return digests


def _rate(values: list[float]) -> RateWithSpread:
    if not values:
        return RateWithSpread(mean=None, spread=None)
    return RateWithSpread(
        mean=statistics.fmean(values), spread=statistics.pstdev(values)
    )


def _difficulty_of(digest: SessionDigest, task: TaskBundle) -> Difficulty | None:
    if task.difficulty is not None:
        return task.difficulty.level
    if digest.first_code.strip():
        try:
            return classify_difficulty(task, digest.first_code).level
        except Exception:
            return None
    return None


def compute_metrics(
    events: Iterable[TranscriptEvent], corpus: list[TaskBundle]
) -> MetricsReport:
    by_id = {task.task_id: task for task in corpus}
    digests = digest_sessions(events)
    for digest in digests:
        if digest.task_id not in by_id:
            raise UnknownTask(digest.session_id, digest.task_id)

    excluded = [d for d in digests if d.terminal_kind == "SkipUnclear"]
    scored = [d for d in digests if d.terminal_kind != "SkipUnclear"]

    successes = [1.0 if d.success else 0.0 for d in scored]
    times = [float(d.elapsed_ms) for d in scored]

    per_difficulty: dict[Difficulty, DifficultySlice] = {}
    for level in Difficulty:
        subset = [
            d for d in scored if _difficulty_of(d, by_id[d.task_id]) is level
        ]
        per_difficulty[level] = DifficultySlice(
            n_sessions=len(subset),
            success_rate=_rate([1.0 if d.success else 0.0 for d in subset]),
            avg_time_ms=_rate([float(d.elapsed_ms) for d in subset]),
        )

    return MetricsReport(
        success_rate=_rate(successes),
        avg_time_ms=_rate(times),
        per_difficulty=per_difficulty,
        excluded_count=len(excluded),
        n_sessions=len(scored),
    )


# -- feedback annotation aggregation ------------------------------------------


@dataclass(frozen=True)
class FeedbackKindRow:
    kind: FeedbackKind
    frequency: int
    annotated: int
    accurate: int
    accuracy: float | None
    success_given_accurate: float | None


def feedback_stats(
    annotations: list[FeedbackAnnotation],
    digests: list[SessionDigest],
) -> list[FeedbackKindRow]:
    """Per-kind frequency / accuracy / success-when-accurate table.

    Frequency is conversation-level: a kind counts once per session no
    matter how many turns carried it.  success_given_accurate is the success
    rate of sessions that received at least one accurate annotation of that
    kind.
    """
    outcomes = {d.session_id: d for d in digests}
    for annotation in annotations:
        if annotation.session_id not in outcomes:
            raise DanglingAnnotation(annotation.session_id)

    rows = []
    for kind in FeedbackKind:
        of_kind = [a for a in annotations if a.kind is kind]
        if not of_kind:
            continue
        sessions = sorted({a.session_id for a in of_kind})
        judged = [a for a in of_kind if a.accurate is not None]
        accurate = [a for a in judged if a.accurate]
        accurate_sessions = sorted({a.session_id for a in accurate})
        wins = [s for s in accurate_sessions if outcomes[s].success]
        rows.append(
            FeedbackKindRow(
                kind=kind,
                frequency=len(sessions),
                annotated=len(judged),
                accurate=len(accurate),
                accuracy=(len(accurate) / len(judged)) if judged else None,
                success_given_accurate=(
                    len(wins) / len(accurate_sessions) if accurate_sessions else None
                ),
            )
        )
    return rows


# -- rendering -----------------------------------------------------------------


class ReportFormat(str, Enum):
    PLAIN_TABLE = "PlainTable"
    DELIMITED_TEXT = "DelimitedText"


def _fmt(value: float | None, places: int = 4) -> str:
    return "n/a" if value is None else f"{value:.{places}f}"


def render_report(report: MetricsReport, format: ReportFormat) -> str:
    rows = [
        (
            "overall",
            report.n_sessions,
            report.success_rate.mean,
            report.success_rate.spread,
            report.avg_time_ms.mean,
            report.avg_time_ms.spread,
        )
    ]
    for level in Difficulty:
        piece = report.per_difficulty.get(level)
        if piece is None:
            continue
        rows.append(
            (
                level.value,
                piece.n_sessions,
                piece.success_rate.mean,
                piece.success_rate.spread,
                piece.avg_time_ms.mean,
                piece.avg_time_ms.spread,
            )
        )

    header = ("slice", "n", "success_rate", "sr_sd", "avg_time_ms", "time_sd")
    if format is ReportFormat.DELIMITED_TEXT:
        lines = ["\t".join(header)]
        for slice_name, n, sr, sr_sd, t, t_sd in rows:
            lines.append(
                "\t".join(
                    [slice_name, str(n), _fmt(sr), _fmt(sr_sd), _fmt(t, 1), _fmt(t_sd, 1)]
                )
            )
        lines.append(f"excluded\t{report.excluded_count}")
        return "\n".join(lines) + "\n"

    widths = (10, 5, 13, 8, 12, 10)
    def line(cells):
        return "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()

    lines = [line(header), line(tuple("-" * w for w in widths))]
    for slice_name, n, sr, sr_sd, t, t_sd in rows:
        lines.append(
            line((slice_name, n, _fmt(sr), _fmt(sr_sd), _fmt(t, 1), _fmt(t_sd, 1)))
        )
    lines.append(f"excluded sessions (unclear-question skips): {report.excluded_count}")
    return "\n".join(lines) + "\n"
