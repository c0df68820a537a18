import json
import socket
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from explainloop.errors import CassetteMiss, GatewayTimeout, ProviderError
from explainloop.gateway import (
    DEFAULT_MODEL_NAME,
    Cassette,
    CompletionRecord,
    Gateway,
    GatewayMode,
    ModelConfig,
    build_request_payload,
    httpx_transport,
    replay_gateway,
)
from explainloop.prompts import Message, Purpose, Role
from explainloop.prompts import _bundle


def bundle(text: str):
    return _bundle([Message(Role.USER, text)], Purpose.CODE_GEN)


def record_for(text: str, reply: str) -> CompletionRecord:
    b = bundle(text)
    return CompletionRecord(
        fingerprint=b.fingerprint,
        request=b,
        response_text=reply,
        latency_ms=12,
        recorded_at="2024-01-01T00:00:00Z",
    )


class TestModelConfig:
    def test_defaults(self):
        cfg = ModelConfig(model_name=DEFAULT_MODEL_NAME)
        assert cfg.temperature == 0.0
        assert cfg.credential_ref == "OPENAI_API_KEY"

    def test_rejects_blank_model(self):
        with pytest.raises(ValueError):
            ModelConfig(model_name="  ")

    def test_rejects_negative_temperature(self):
        with pytest.raises(ValueError):
            ModelConfig(model_name="m", temperature=-0.5)

    def test_rejects_nonpositive_token_budget(self):
        with pytest.raises(ValueError):
            ModelConfig(model_name="m", max_output_tokens=0)

    def test_request_payload_shape(self):
        cfg = ModelConfig(model_name="m", temperature=0.0, max_output_tokens=64)
        payload = build_request_payload(bundle("hi"), cfg)
        assert payload == {
            "model": "m",
            "temperature": 0.0,
            "max_tokens": 64,
            "messages": [{"role": "user", "content": "hi"}],
        }


class TestCompletionRecord:
    def test_fingerprint_must_match_request(self):
        b = bundle("x")
        with pytest.raises(ValueError):
            CompletionRecord(
                fingerprint="0" * 64,
                request=b,
                response_text="r",
                latency_ms=1,
                recorded_at="2024-01-01T00:00:00Z",
            )

    def test_json_round_trip(self):
        rec = record_for("round trip", "the reply")
        again = CompletionRecord.from_json(rec.to_json())
        assert again == rec

    def test_from_json_recomputes_fingerprint(self):
        raw = record_for("tamper", "r").to_json()
        raw["messages"][0][1] = "tampered content"
        with pytest.raises(ValueError):
            CompletionRecord.from_json(raw)


class TestCassette:
    def test_append_then_lookup(self, tmp_path):
        path = tmp_path / "c.jsonl"
        cassette = Cassette(path)
        rec = record_for("q1", "r1")
        cassette.append(rec)
        assert rec.fingerprint in cassette
        assert cassette.lookup(rec.fingerprint).response_text == "r1"

    def test_persists_across_instances(self, tmp_path):
        path = tmp_path / "c.jsonl"
        Cassette(path).append(record_for("persist", "yes"))
        reopened = Cassette(path)
        assert len(reopened) == 1
        assert reopened.lookup(record_for("persist", "yes").fingerprint)

    def test_duplicate_append_rejected(self, tmp_path):
        cassette = Cassette(tmp_path / "c.jsonl")
        cassette.append(record_for("dup", "a"))
        with pytest.raises(ValueError):
            cassette.append(record_for("dup", "b"))

    def test_duplicate_append_with_overwrite(self, tmp_path):
        cassette = Cassette(tmp_path / "c.jsonl")
        rec_a = record_for("dup", "a")
        cassette.append(rec_a)
        cassette.append(record_for("dup", "b"), overwrite=True)
        assert cassette.lookup(rec_a.fingerprint).response_text == "b"

    def test_file_is_append_only_jsonl(self, tmp_path):
        path = tmp_path / "c.jsonl"
        cassette = Cassette(path)
        cassette.append(record_for("one", "1"))
        cassette.append(record_for("two", "2"))
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        for line in lines:
            parsed = json.loads(line)
            assert set(parsed) == {
                "fingerprint", "purpose", "messages",
                "response_text", "latency_ms", "recorded_at",
            }

    def test_fixture_record_format_golden(self, fixtures_dir, golden_dir):
        first = (fixtures_dir / "cassettes" / "guided_sql.jsonl").read_text()
        first_record = json.loads(first.splitlines()[0])
        expected = json.loads((golden_dir / "cassette_record.json").read_text())
        assert first_record == expected


class TestReplayMode:
    def test_replays_without_touching_transport(self, tmp_path):
        path = tmp_path / "c.jsonl"
        Cassette(path).append(record_for("cached", "cached reply"))
        calls = []

        def transport(payload, config):
            calls.append(payload)
            return "live reply"

        gw = Gateway(Cassette(path), transport=transport)
        out = gw.complete(bundle("cached"), ModelConfig("m"), GatewayMode.REPLAY)
        assert out == "cached reply"
        assert calls == []

    def test_miss_raises_with_fingerprint(self, tmp_path):
        gw = Gateway(Cassette(tmp_path / "c.jsonl"), transport=lambda p, c: "x")
        b = bundle("never recorded")
        with pytest.raises(CassetteMiss) as err:
            gw.complete(b, ModelConfig("m"), GatewayMode.REPLAY)
        assert err.value.fingerprint == b.fingerprint

    def test_replay_gateway_refuses_network(self, tmp_path):
        path = tmp_path / "c.jsonl"
        Cassette(path).append(record_for("hit", "ok"))
        gw = replay_gateway(path)
        assert gw.complete(bundle("hit"), ModelConfig("m"), GatewayMode.REPLAY) == "ok"
        # record mode on a miss would need the network; the transport refuses
        with pytest.raises(ProviderError):
            gw.complete(
                bundle("miss"), ModelConfig("m"), GatewayMode.RECORD_THEN_REPLAY
            )


class TestRecordMode:
    def test_records_then_replays(self, tmp_path):
        path = tmp_path / "c.jsonl"
        calls = []

        def transport(payload, config):
            calls.append(payload)
            return f"reply #{len(calls)}"

        gw = Gateway(Cassette(path), transport=transport)
        first = gw.complete(
            bundle("fresh"), ModelConfig("m"), GatewayMode.RECORD_THEN_REPLAY
        )
        second = gw.complete(
            bundle("fresh"), ModelConfig("m"), GatewayMode.RECORD_THEN_REPLAY
        )
        assert first == "reply #1"
        assert second == "reply #1"  # served from cassette
        assert len(calls) == 1
        assert len(Cassette(path)) == 1  # persisted

    def test_live_mode_always_calls_transport(self, tmp_path):
        calls = []

        def transport(payload, config):
            calls.append(payload)
            return "live"

        gw = Gateway(Cassette(tmp_path / "c.jsonl"), transport=transport)
        gw.complete(bundle("q"), ModelConfig("m"), GatewayMode.LIVE)
        gw.complete(bundle("q"), ModelConfig("m"), GatewayMode.LIVE)
        assert len(calls) == 2


class _StubHandler(BaseHTTPRequestHandler):
    """Minimal chat-completions endpoint used by transport tests."""

    reply_text = "stub reply"
    status = 200

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        _StubHandler.last_request = body
        _StubHandler.last_auth = self.headers.get("Authorization")
        if self.status != 200:
            self.send_response(self.status)
            self.end_headers()
            self.wfile.write(b"upstream unhappy")
            return
        payload = json.dumps(
            {"choices": [{"message": {"content": self.reply_text}}]}
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):  # silence test output
        pass


@pytest.fixture()
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.status = 200
    _StubHandler.reply_text = "stub reply"
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
    server.shutdown()


class TestHttpxTransport:
    def test_round_trip_against_stub(self, stub_server, monkeypatch):
        monkeypatch.setenv("STUB_KEY", "sk-test-123")
        cfg = ModelConfig(
            model_name="stub-model", endpoint=stub_server, credential_ref="STUB_KEY"
        )
        out = httpx_transport(build_request_payload(bundle("ping"), cfg), cfg)
        assert out == "stub reply"
        assert _StubHandler.last_auth == "Bearer sk-test-123"
        assert _StubHandler.last_request["model"] == "stub-model"

    def test_non_200_maps_to_provider_error(self, stub_server, monkeypatch):
        monkeypatch.setenv("STUB_KEY", "sk-test-123")
        _StubHandler.status = 429
        cfg = ModelConfig(
            model_name="m", endpoint=stub_server, credential_ref="STUB_KEY"
        )
        with pytest.raises(ProviderError) as err:
            httpx_transport(build_request_payload(bundle("x"), cfg), cfg)
        assert err.value.status == 429

    def test_unreachable_endpoint(self, monkeypatch):
        monkeypatch.setenv("STUB_KEY", "sk-test-123")
        # grab a port that is definitely closed
        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
        probe.close()
        cfg = ModelConfig(
            model_name="m",
            endpoint=f"http://127.0.0.1:{port}/v1/chat/completions",
            credential_ref="STUB_KEY",
            timeout_s=2.0,
        )
        with pytest.raises((ProviderError, GatewayTimeout)):
            httpx_transport(build_request_payload(bundle("x"), cfg), cfg)

    def test_missing_credential_is_a_clear_error(self, stub_server, monkeypatch):
        monkeypatch.delenv("NOPE_KEY", raising=False)
        cfg = ModelConfig(model_name="m", endpoint=stub_server,
                          credential_ref="NOPE_KEY")
        # request still goes out (some gateways allow anonymous), but there
        # must be no Authorization header fabricated from nothing
        httpx_transport(build_request_payload(bundle("x"), cfg), cfg)
        assert _StubHandler.last_auth is None
