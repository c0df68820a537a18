"""Model gateway: the single choke point for LLM calls.

Live calls speak the chat-completion HTTP+JSON wire protocol through an
injectable transport.  Every call can be recorded into a cassette file and
replayed byte-exactly later, so the rest of the engine is testable without
network access or API spend.

Cassette format (documented, golden-tested): one JSON object per line with
fields ``fingerprint``, ``purpose``, ``messages`` (list of ``[role, content]``
pairs), ``response_text``, ``latency_ms`` and ``recorded_at``.  Files are
append-only; the newest record for a fingerprint wins.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable

import httpx

from .errors import CassetteMiss, GatewayTimeout, ProviderError
from .prompts import Message, PromptBundle, Purpose, Role, fingerprint_messages

DEFAULT_MODEL_NAME = "gpt-3.5-turbo-0613"


@dataclass(frozen=True)
class ModelConfig:
    """Provider-facing knobs.  Tests always pin temperature to 0."""

    model_name: str = DEFAULT_MODEL_NAME
    temperature: float = 0.0
    max_output_tokens: int = 512
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    credential_ref: str = "OPENAI_API_KEY"
    timeout_s: float = 30.0

    def __post_init__(self) -> None:
        if not self.model_name.strip():
            raise ValueError("model_name must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


class GatewayMode(str, Enum):
    LIVE = "live"
    REPLAY = "replay"
    RECORD_THEN_REPLAY = "record"


@dataclass(frozen=True)
class CompletionRecord:
    fingerprint: str
    request: PromptBundle
    response_text: str
    latency_ms: int
    recorded_at: str

    def __post_init__(self) -> None:
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be non-negative")
        if self.fingerprint != self.request.fingerprint:
            raise ValueError("record fingerprint does not match its request")

    def to_json(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "purpose": self.request.purpose.value,
            "messages": [[m.role.value, m.content] for m in self.request.messages],
            "response_text": self.response_text,
            "latency_ms": self.latency_ms,
            "recorded_at": self.recorded_at,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "CompletionRecord":
        messages = tuple(Message(Role(r), c) for r, c in raw["messages"])
        bundle = PromptBundle(
            messages=messages,
            purpose=Purpose(raw["purpose"]),
            fingerprint=fingerprint_messages(messages),
        )
        return cls(
            fingerprint=raw["fingerprint"],
            request=bundle,
            response_text=raw["response_text"],
            latency_ms=int(raw["latency_ms"]),
            recorded_at=raw["recorded_at"],
        )


class Cassette:
    """Append-only JSONL store of completions, keyed by prompt fingerprint.

    Writes are serialized through one lock; lookups read an immutable
    snapshot dict, so replay never blocks on a writer.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[str, CompletionRecord] = {}
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                if not line.strip():
                    continue
                record = CompletionRecord.from_json(json.loads(line))
                self._records[record.fingerprint] = record

    def lookup(self, fingerprint: str) -> CompletionRecord | None:
        return self._records.get(fingerprint)

    def __contains__(self, fingerprint: str) -> bool:
        return fingerprint in self._records

    def __len__(self) -> int:
        return len(self._records)

    def append(self, record: CompletionRecord, overwrite: bool = False) -> None:
        with self._lock:
            if record.fingerprint in self._records and not overwrite:
                raise ValueError(
                    f"cassette already holds fingerprint {record.fingerprint}; "
                    "pass overwrite=True to shadow it"
                )
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")
            self._records[record.fingerprint] = record


# A transport takes the provider request payload plus config and returns the
# response text.  It raises ProviderError / GatewayTimeout on failure.  Tests
# inject counting or canned transports; nothing outside this module opens a
# socket.
Transport = Callable[[dict, ModelConfig], str]


def build_request_payload(bundle: PromptBundle, config: ModelConfig) -> dict:
    return {
        "model": config.model_name,
        "temperature": config.temperature,
        "max_tokens": config.max_output_tokens,
        "messages": [
            {"role": m.role.value, "content": m.content} for m in bundle.messages
        ],
    }


def httpx_transport(payload: dict, config: ModelConfig) -> str:
    headers = {"Content-Type": "application/json"}
    credential = os.environ.get(config.credential_ref, "")
    if credential:
        headers["Authorization"] = f"Bearer {credential}"
    started = time.monotonic()
    try:
        response = httpx.post(
            config.endpoint,
            json=payload,
            headers=headers,
            timeout=config.timeout_s,
        )
    except httpx.TimeoutException:
        raise GatewayTimeout(int((time.monotonic() - started) * 1000))
    except httpx.HTTPError as exc:
        raise ProviderError(0, f"{type(exc).__name__}: {exc}")
    if response.status_code != 200:
        raise ProviderError(response.status_code, response.text[:500])
    try:
        body = response.json()
        return body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ProviderError(response.status_code, f"unparseable body: {exc}")


class Gateway:
    """complete() is the only model-call entry point in the package."""

    def __init__(
        self,
        cassette: Cassette | None = None,
        transport: Transport = httpx_transport,
        overwrite_on_record: bool = False,
    ):
        self.cassette = cassette
        self.transport = transport
        self.overwrite_on_record = overwrite_on_record

    def complete(
        self,
        bundle: PromptBundle,
        config: ModelConfig,
        mode: GatewayMode,
    ) -> str:
        if mode is GatewayMode.REPLAY:
            record = self.cassette.lookup(bundle.fingerprint) if self.cassette else None
            if record is None:
                raise CassetteMiss(bundle.fingerprint)
            return record.response_text

        if mode is GatewayMode.RECORD_THEN_REPLAY and self.cassette is not None:
            cached = self.cassette.lookup(bundle.fingerprint)
            if cached is not None and not self.overwrite_on_record:
                return cached.response_text

        payload = build_request_payload(bundle, config)
        started = time.monotonic()
        text = self.transport(payload, config)
        latency_ms = int((time.monotonic() - started) * 1000)

        if mode is GatewayMode.RECORD_THEN_REPLAY:
            if self.cassette is None:
                raise ValueError("record mode requires a cassette")
            record = CompletionRecord(
                fingerprint=bundle.fingerprint,
                request=bundle,
                response_text=text,
                latency_ms=latency_ms,
                recorded_at=datetime.now(timezone.utc).isoformat(),
            )
            self.cassette.append(record, overwrite=self.overwrite_on_record)
        return text


def replay_gateway(cassette_path: str | Path) -> Gateway:
    """Convenience: a gateway that can only replay (any live call would fail)."""

    def _refuse(payload: dict, config: ModelConfig) -> str:
        raise ProviderError(0, "network disabled: replay-only gateway")

    return Gateway(cassette=Cassette(cassette_path), transport=_refuse)
