"""Append-only transcript log.

One JSON object per line, one line per session event.  This file format is
the contract between the session engine and the metrics layer, so field
names are frozen and golden-tested.  Event kinds:

- ``session_created``: task_id, mode, deadline_ms, started_at
- ``turn_added``: turn index, code, explanation, model_reply, execution
  summary (status / rows / case results — no wall-clock times, so replayed
  runs serialize identically), verdict, prompt fingerprints
- ``feedback``: turn index the feedback responds to, text
- ``terminal``: outcome kind, final verdict, elapsed_ms, final state
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

EVENT_KINDS = ("session_created", "turn_added", "feedback", "terminal")


@dataclass(frozen=True)
class TranscriptEvent:
    kind: str
    at_ms: int
    session_id: str
    payload: dict

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown transcript event kind: {self.kind}")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "at_ms": self.at_ms,
            "session_id": self.session_id,
            "payload": self.payload,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "TranscriptEvent":
        return cls(
            kind=raw["kind"],
            at_ms=int(raw["at_ms"]),
            session_id=raw["session_id"],
            payload=raw["payload"],
        )


def event_line(event: TranscriptEvent) -> str:
    """Canonical serialization: compact separators, keys in insertion order."""
    return json.dumps(event.to_json(), ensure_ascii=False, separators=(",", ":"))


class TranscriptWriter:
    """Appends events to a JSONL file (or buffers in memory when path=None)."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.events: list[TranscriptEvent] = []
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def emit(self, event: TranscriptEvent) -> None:
        self.events.append(event)
        if self.path is not None:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(event_line(event) + "\n")

    def rendered(self) -> str:
        return "".join(event_line(e) + "\n" for e in self.events)


def read_transcript(path: str | Path) -> list[TranscriptEvent]:
    events = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            events.append(TranscriptEvent.from_json(json.loads(line)))
    return events


def group_by_session(
    events: Iterable[TranscriptEvent],
) -> dict[str, list[TranscriptEvent]]:
    grouped: dict[str, list[TranscriptEvent]] = {}
    for event in events:
        grouped.setdefault(event.session_id, []).append(event)
    return grouped
