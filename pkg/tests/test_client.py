import json
import threading

import pytest

from mock_server import completion_body, scripted_server
from satlab.client import (
    CompletionClient,
    CompletionRecord,
    ModelConfig,
    Usage,
    approx_tokens,
    request_hash,
)
from satlab.errors import ConfigError, RequestError, TransportError

MESSAGES = [{"role": "system", "content": "s"}, {"role": "user", "content": "u"}]


def make_config(url, **overrides) -> ModelConfig:
    fields = dict(model_name="test-model", endpoint=url, temperature=0.3,
                  top_p=1.0, max_tokens=64, timeout_s=5.0, max_retries=3,
                  backoff_base_s=0.0)
    fields.update(overrides)
    return ModelConfig(**fields)


class TestRequestHash:
    def test_stable_and_sensitive(self):
        cfg = make_config("http://x")
        h1 = request_hash(cfg, MESSAGES)
        assert h1 == request_hash(cfg, MESSAGES)
        assert h1 != request_hash(make_config("http://x", temperature=0.7), MESSAGES)
        assert h1 != request_hash(cfg, [{"role": "user", "content": "other"}])
        assert len(h1) == 64


class TestCache:
    def test_record_round_trip_byte_identical(self, tmp_path):
        rec = CompletionRecord(
            request_hash="ab" * 32, model_name="m", messages=MESSAGES,
            response_text="hello", reasoning_text="thinking",
            usage=Usage(10, 20), latency_s=0.5, timestamp=123.0,
        )
        raw = rec.to_json_bytes()
        again = CompletionRecord.from_json_bytes(raw)
        assert again == rec
        assert again.to_json_bytes() == raw

    def test_layout_two_level_hex(self, tmp_path):
        with scripted_server([(200, completion_body("ok"))]) as (url, state):
            client = CompletionClient(make_config(url), cache_dir=tmp_path)
            record = client.complete(MESSAGES)
        h = record.request_hash
        expected = tmp_path / h[0:2] / h[2:4] / f"{h}.json"
        assert expected.exists()
        assert expected.read_bytes() == record.to_json_bytes()

    def test_second_call_is_cache_hit(self, tmp_path):
        with scripted_server([(200, completion_body("ok"))]) as (url, state):
            client = CompletionClient(make_config(url), cache_dir=tmp_path)
            first = client.complete(MESSAGES)
            second = client.complete(MESSAGES)
            assert state["hits"] == 1
        assert first == second

    def test_cache_survives_across_clients_and_dead_server(self, tmp_path):
        with scripted_server([(200, completion_body("persisted"))]) as (url, state):
            CompletionClient(make_config(url), cache_dir=tmp_path).complete(MESSAGES)
            dead_url = url
        client = CompletionClient(make_config(dead_url), cache_dir=tmp_path)
        assert client.complete(MESSAGES).response_text == "persisted"
        assert client.network_calls == 0

    def test_concurrent_identical_requests_fetch_once(self, tmp_path):
        with scripted_server([(200, completion_body("ok"))]) as (url, state):
            client = CompletionClient(make_config(url), cache_dir=tmp_path)
            threads = [threading.Thread(target=client.complete, args=(MESSAGES,))
                       for _ in range(8)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            assert state["hits"] == 1


class TestRetries:
    def test_429_twice_then_success_is_three_attempts(self, tmp_path):
        script = [(429, None), (429, None), (200, completion_body("done"))]
        with scripted_server(script) as (url, state):
            client = CompletionClient(make_config(url), cache_dir=tmp_path)
            record = client.complete(MESSAGES)
            assert state["hits"] == 3
        assert record.response_text == "done"

    def test_500_retries(self, tmp_path):
        with scripted_server([(500, None), (200, completion_body("ok"))]) as (url, _):
            client = CompletionClient(make_config(url), cache_dir=tmp_path)
            assert client.complete(MESSAGES).response_text == "ok"

    def test_exhausted_retries_raise_transport_error(self, tmp_path):
        with scripted_server([(429, None)]) as (url, state):
            client = CompletionClient(make_config(url, max_retries=2),
                                      cache_dir=tmp_path)
            with pytest.raises(TransportError):
                client.complete(MESSAGES)
            assert state["hits"] == 3

    def test_non_retryable_4xx_fails_fast(self, tmp_path):
        with scripted_server([(404, {"error": "nope"})]) as (url, state):
            client = CompletionClient(make_config(url), cache_dir=tmp_path)
            with pytest.raises(RequestError):
                client.complete(MESSAGES)
            assert state["hits"] == 1


class TestWireFormat:
    def test_generation_parameters_serialized(self, tmp_path):
        with scripted_server([(200, completion_body("ok"))]) as (url, state):
            cfg = make_config(url, temperature=0.3, top_p=1.0, max_tokens=8000)
            CompletionClient(cfg, cache_dir=tmp_path).complete(MESSAGES)
            sent = state["requests"][0]
        assert sent["temperature"] == 0.3
        assert sent["top_p"] == 1.0
        assert sent["max_tokens"] == 8000
        assert sent["model"] == "test-model"
        assert sent["messages"] == MESSAGES

    def test_api_key_header_from_env(self, tmp_path, monkeypatch):
        captured = {}

        def script(payload):
            return 200, completion_body("ok")

        monkeypatch.setenv("SATLAB_API_KEY", "sk-test")
        with scripted_server(script) as (url, state):
            CompletionClient(make_config(url), cache_dir=tmp_path).complete(MESSAGES)
        # header check happens through the request actually succeeding; the
        # mock ignores auth, so just assert no crash and cache written
        assert state["hits"] == 1

    def test_provider_usage_preferred(self, tmp_path):
        body = completion_body("ok", input_tokens=111, output_tokens=222)
        with scripted_server([(200, body)]) as (url, _):
            rec = CompletionClient(make_config(url), cache_dir=tmp_path).complete(MESSAGES)
        assert rec.usage == Usage(111, 222, approximate=False)

    def test_missing_usage_approximated_and_flagged(self, tmp_path):
        body = completion_body("four byte chunks here", input_tokens=None)
        with scripted_server([(200, body)]) as (url, _):
            rec = CompletionClient(make_config(url), cache_dir=tmp_path).complete(MESSAGES)
        assert rec.usage.approximate
        assert rec.usage.output_tokens == approx_tokens("four byte chunks here")

    def test_reasoning_text_captured(self, tmp_path):
        body = completion_body("answer", reasoning="step by step")
        with scripted_server([(200, body)]) as (url, _):
            rec = CompletionClient(make_config(url), cache_dir=tmp_path).complete(MESSAGES)
        assert rec.reasoning_text == "step by step"


class TestModelConfigFile:
    def test_parse_key_value_file(self, tmp_path):
        path = tmp_path / "model.cfg"
        path.write_text(
            "# subject config\n"
            "model_name = gpt-test\n"
            "endpoint = http://localhost:9/v1/chat/completions\n"
            "temperature = 0.3\n"
            "top_p = 1\n"
            "max_tokens = 16000\n"
            "max_retries = 2\n"
        )
        cfg = ModelConfig.from_file(path)
        assert cfg.model_name == "gpt-test"
        assert cfg.max_tokens == 16000
        assert cfg.max_retries == 2

    def test_missing_endpoint_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("model_name = x\n")
        with pytest.raises(ConfigError):
            ModelConfig.from_file(path)

    def test_garbage_line_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("just words\n")
        with pytest.raises(ConfigError):
            ModelConfig.from_file(path)
