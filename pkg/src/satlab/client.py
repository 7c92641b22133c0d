"""Provider-agnostic chat-completions client with a content-addressed cache.

Requests are keyed by a digest of (model, messages, temperature, top_p,
max_tokens); hits never touch the network, so interrupted experiment runs
resume for free. Cache files are written atomically (temp + rename) under
``cache/<h[0:2]>/<h[2:4]>/<h>.json``. Credentials come from the
``SATLAB_API_KEY`` environment variable only; configs and caches are
committable artifacts.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import ConfigError, RequestError, TransportError

API_KEY_ENV = "SATLAB_API_KEY"
RETRYABLE_STATUS = {429, 500, 502, 503, 504}


@dataclass
class ModelConfig:
    model_name: str
    endpoint: str
    temperature: float = 0.3
    top_p: float = 1.0
    max_tokens: int = 8000
    timeout_s: float = 120.0
    max_retries: int = 4
    backoff_base_s: float = 0.5

    @classmethod
    def from_file(cls, path: str) -> "ModelConfig":
        """Parse a flat key=value config file ('#' starts a comment)."""
        fields: dict[str, str] = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = line.split("=", 1)
            fields[key.strip()] = value.strip().strip("'\"")
        try:
            return cls(
                model_name=fields.pop("model_name", fields.pop("model", None)) or "",
                endpoint=fields.pop("endpoint"),
                temperature=float(fields.pop("temperature", 0.3)),
                top_p=float(fields.pop("top_p", 1.0)),
                max_tokens=int(fields.pop("max_tokens", 8000)),
                timeout_s=float(fields.pop("timeout", fields.pop("timeout_s", 120.0))),
                max_retries=int(fields.pop("max_retries", 4)),
                backoff_base_s=float(fields.pop("backoff_base_s", 0.5)),
            )
        except KeyError as missing:
            raise ConfigError(f"{path}: missing required field {missing}")


@dataclass
class Usage:
    input_tokens: int
    output_tokens: int
    approximate: bool = False

    def to_json(self) -> dict:
        return {
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "approximate": self.approximate,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Usage":
        return cls(obj["input_tokens"], obj["output_tokens"], obj.get("approximate", False))


@dataclass
class CompletionRecord:
    request_hash: str
    model_name: str
    messages: list[dict]
    response_text: str
    reasoning_text: str | None
    usage: Usage
    latency_s: float
    timestamp: float

    def to_json_bytes(self) -> bytes:
        obj = {
            "request_hash": self.request_hash,
            "model_name": self.model_name,
            "messages": self.messages,
            "response_text": self.response_text,
            "reasoning_text": self.reasoning_text,
            "usage": self.usage.to_json(),
            "latency_s": self.latency_s,
            "timestamp": self.timestamp,
        }
        return json.dumps(obj, sort_keys=True, ensure_ascii=False,
                          separators=(",", ":")).encode()

    @classmethod
    def from_json_bytes(cls, raw: bytes) -> "CompletionRecord":
        obj = json.loads(raw)
        return cls(
            request_hash=obj["request_hash"],
            model_name=obj["model_name"],
            messages=obj["messages"],
            response_text=obj["response_text"],
            reasoning_text=obj.get("reasoning_text"),
            usage=Usage.from_json(obj["usage"]),
            latency_s=obj["latency_s"],
            timestamp=obj["timestamp"],
        )


def request_hash(config: ModelConfig, messages: list[dict]) -> str:
    payload = json.dumps(
        {
            "model": config.model_name,
            "messages": messages,
            "temperature": config.temperature,
            "top_p": config.top_p,
            "max_tokens": config.max_tokens,
        },
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def approx_tokens(text: str) -> int:
    return -(-len(text.encode()) // 4)  # ceil(bytes / 4)


class CompletionClient:
    """Shareable across threads; per-hash locks prevent duplicate fetches
    and a semaphore caps in-flight requests (rate limits dominate)."""

    def __init__(self, config: ModelConfig, cache_dir: str = "cache",
                 max_in_flight: int = 4, session: requests.Session | None = None):
        self.config = config
        self.cache_dir = Path(cache_dir)
        self._session = session or requests.Session()
        self._gate = threading.Semaphore(max_in_flight)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self.network_calls = 0

    def _cache_path(self, h: str) -> Path:
        return self.cache_dir / h[0:2] / h[2:4] / f"{h}.json"

    def _read_cache(self, h: str) -> CompletionRecord | None:
        path = self._cache_path(h)
        if not path.exists():
            return None
        return CompletionRecord.from_json_bytes(path.read_bytes())

    def _write_cache(self, record: CompletionRecord) -> None:
        path = self._cache_path(record.request_hash)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(record.to_json_bytes())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def complete(self, messages: list[dict]) -> CompletionRecord:
        h = request_hash(self.config, messages)
        cached = self._read_cache(h)
        if cached is not None:
            return cached
        with self._locks_guard:
            lock = self._locks.setdefault(h, threading.Lock())
        with lock:
            cached = self._read_cache(h)  # a racing thread may have fetched it
            if cached is not None:
                return cached
            record = self._fetch(h, messages)
            self._write_cache(record)
            return record

    def _fetch(self, h: str, messages: list[dict]) -> CompletionRecord:
        cfg = self.config
        body = {
            "model": cfg.model_name,
            "messages": messages,
            "temperature": cfg.temperature,
            "top_p": cfg.top_p,
            "max_tokens": cfg.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_error: Exception | None = None
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                delay = cfg.backoff_base_s * (2 ** (attempt - 1))
                time.sleep(delay + random.uniform(0, cfg.backoff_base_s))
            started = time.perf_counter()
            try:
                with self._gate:
                    self.network_calls += 1
                    resp = self._session.post(
                        cfg.endpoint, json=body, headers=headers, timeout=cfg.timeout_s
                    )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code in RETRYABLE_STATUS:
                last_error = RequestError(f"HTTP {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise RequestError(
                    f"endpoint rejected request: HTTP {resp.status_code}: {resp.text[:200]}"
                )
            latency = time.perf_counter() - started
            return self._parse_response(h, messages, resp.json(), latency)
        raise TransportError(
            f"exhausted {cfg.max_retries + 1} attempts against {cfg.endpoint}: {last_error}"
        )

    def _parse_response(self, h: str, messages: list[dict], obj: dict,
                        latency: float) -> CompletionRecord:
        try:
            message = obj["choices"][0]["message"]
            text = message.get("content") or ""
        except (KeyError, IndexError, TypeError):
            raise RequestError(f"malformed completion payload: {str(obj)[:200]}")
        reasoning = message.get("reasoning_content") or message.get("reasoning")
        usage_obj = obj.get("usage") or {}
        input_tokens = usage_obj.get("prompt_tokens", usage_obj.get("input_tokens"))
        output_tokens = usage_obj.get("completion_tokens", usage_obj.get("output_tokens"))
        if input_tokens is None or output_tokens is None:
            usage = Usage(
                approx_tokens("".join(m["content"] for m in messages)),
                approx_tokens(text + (reasoning or "")),
                approximate=True,
            )
        else:
            usage = Usage(int(input_tokens), int(output_tokens))
        return CompletionRecord(
            request_hash=h,
            model_name=self.config.model_name,
            messages=messages,
            response_text=text,
            reasoning_text=reasoning,
            usage=usage,
            latency_s=latency,
            timestamp=time.time(),
        )
