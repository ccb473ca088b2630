"""Chat-completion gateway with a record/replay store.

Every request is identified by a content digest of (model, messages,
temperature); the replay store keeps one JSON file per digest.  replay mode
never touches the network, live mode always does, hybrid serves from the
store and falls through to the network on a miss, recording what it gets.
Credentials live only in process configuration and are never written into
records, logs, or anything derived from them.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

MODE_LIVE = "live"
MODE_REPLAY = "replay"
MODE_HYBRID = "hybrid"
MODES = (MODE_LIVE, MODE_REPLAY, MODE_HYBRID)

DEFAULT_CONCURRENCY = 4
BACKOFF_BASE_SECONDS = 1.0
BACKOFF_FACTOR = 2.0
MAX_ATTEMPTS = 5

ENV_ENDPOINT = "VIZBENCH_LLM_ENDPOINT"
ENV_API_KEY = "VIZBENCH_LLM_API_KEY"
ENV_MODEL = "VIZBENCH_LLM_MODEL"


class CacheMiss(LookupError):
    def __init__(self, digest: str):
        self.digest = digest
        super().__init__(f"no recorded response for digest {digest}")


class TransportError(RuntimeError):
    def __init__(self, status: int | None, body: str):
        self.status = status
        self.body = body[:200]
        super().__init__(f"transport failure (status {status}): {self.body}")


class RateLimited(TransportError):
    def __init__(self, body: str = ""):
        super().__init__(429, body)


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    messages: tuple
    temperature: float = 0.0
    max_tokens: int | None = None

    @classmethod
    def build(cls, model_id: str, messages: list[dict[str, str]], temperature: float = 0.0, max_tokens: int | None = None) -> CompletionRequest:
        frozen = tuple((m["role"], m["content"]) for m in messages)
        return cls(model_id=model_id, messages=frozen, temperature=temperature, max_tokens=max_tokens)

    def message_dicts(self) -> list[dict[str, str]]:
        return [{"role": r, "content": c} for r, c in self.messages]


@dataclass(frozen=True)
class CompletionRecord:
    request_digest: str
    response_text: str
    latency_ms: int
    backend: str  # "live" | "replay"


def request_digest(request: CompletionRequest) -> str:
    """Stable content hash of what the request means, not how it was spelled.

    Serialization sorts object keys, so two requests differing only in JSON
    key order digest identically.  max_tokens is a transport knob and stays
    out of the identity.
    """
    payload = {
        "model_id": request.model_id,
        "messages": request.message_dicts(),
        "temperature": request.temperature,
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# replay store


class ReplayStore:
    """Directory of one JSON file per recorded exchange, named by digest.

    Reads are lock-free; writes go through a temp file and an atomic rename,
    serialized per store.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self._write_lock = threading.Lock()

    def _path(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def lookup(self, digest: str) -> CompletionRecord:
        path = self._path(digest)
        if not path.is_file():
            raise CacheMiss(digest)
        doc = json.loads(path.read_text(encoding="utf-8"))
        return CompletionRecord(
            request_digest=digest,
            response_text=doc["response_text"],
            latency_ms=int(doc.get("latency_ms", 0)),
            backend=MODE_REPLAY,
        )

    def store(self, request: CompletionRequest, response_text: str, latency_ms: int) -> str:
        digest = request_digest(request)
        doc = {
            "request": {
                "model_id": request.model_id,
                "messages": request.message_dicts(),
                "temperature": request.temperature,
            },
            "response_text": response_text,
            "latency_ms": latency_ms,
        }
        with self._write_lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            tmp = self._path(digest).with_suffix(".tmp")
            tmp.write_text(json.dumps(doc, indent=2, ensure_ascii=False), encoding="utf-8")
            os.replace(tmp, self._path(digest))
        return digest

    def __contains__(self, digest: str) -> bool:
        return self._path(digest).is_file()


# ---------------------------------------------------------------------------
# transports


def http_transport(endpoint: str, api_key: str | None):
    """Build a callable posting an OpenAI-style chat-completion request."""
    import requests

    def post(request: CompletionRequest) -> str:
        payload: dict = {
            "model": request.model_id,
            "messages": request.message_dicts(),
            "temperature": request.temperature,
        }
        if request.max_tokens is not None:
            payload["max_tokens"] = request.max_tokens
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        resp = requests.post(endpoint, json=payload, headers=headers, timeout=120)
        if resp.status_code == 429:
            raise RateLimited(resp.text)
        if resp.status_code != 200:
            raise TransportError(resp.status_code, resp.text)
        try:
            doc = resp.json()
            return doc["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError) as exc:
            raise TransportError(resp.status_code, f"malformed completion body: {exc}") from exc

    return post


# ---------------------------------------------------------------------------
# gateway


@dataclass
class GatewayConfig:
    mode: str = MODE_REPLAY
    store_dir: str | Path | None = None
    model_id: str | None = None
    endpoint: str | None = None
    api_key: str | None = None
    temperature: float = 0.0
    max_tokens: int | None = None
    concurrency: int = DEFAULT_CONCURRENCY
    transport: object = None  # callable(CompletionRequest) -> str
    sleeper: object = None  # callable(seconds), injectable for tests

    @classmethod
    def from_env(cls, mode: str, store_dir: str | Path | None = None, **overrides) -> GatewayConfig:
        cfg = cls(
            mode=mode,
            store_dir=store_dir,
            model_id=os.environ.get(ENV_MODEL, "gpt-3.5-turbo-16k"),
            endpoint=os.environ.get(ENV_ENDPOINT),
            api_key=os.environ.get(ENV_API_KEY),
        )
        for key, value in overrides.items():
            setattr(cfg, key, value)
        return cfg


class Gateway:
    """Mode-aware completion front end; safe for concurrent use."""

    def __init__(self, config: GatewayConfig):
        if config.mode not in MODES:
            raise ValueError(f"unknown gateway mode {config.mode!r}")
        if config.mode != MODE_LIVE and config.store_dir is None:
            raise ValueError(f"{config.mode} mode needs a replay store directory")
        self.config = config
        self.store = ReplayStore(config.store_dir) if config.store_dir is not None else None
        self._transport = config.transport
        self._sleep = config.sleeper or time.sleep

    @property
    def concurrency(self) -> int:
        return max(1, int(self.config.concurrency))

    def _ensure_transport(self):
        if self._transport is None:
            if not self.config.endpoint:
                raise TransportError(None, f"no endpoint configured (set {ENV_ENDPOINT})")
            self._transport = http_transport(self.config.endpoint, self.config.api_key)
        return self._transport

    def _call_live(self, request: CompletionRequest) -> CompletionRecord:
        transport = self._ensure_transport()
        delay = BACKOFF_BASE_SECONDS
        for attempt in range(1, MAX_ATTEMPTS + 1):
            started = time.monotonic()
            try:
                text = transport(request)
            except RateLimited:
                if attempt == MAX_ATTEMPTS:
                    raise
                self._sleep(delay)
                delay *= BACKOFF_FACTOR
                continue
            latency_ms = int((time.monotonic() - started) * 1000)
            if self.store is not None:
                self.store.store(request, text, latency_ms)
            return CompletionRecord(
                request_digest=request_digest(request),
                response_text=text,
                latency_ms=latency_ms,
                backend=MODE_LIVE,
            )
        raise RateLimited("retries exhausted")  # pragma: no cover - loop always returns or raises

    def complete(self, request: CompletionRequest) -> CompletionRecord:
        digest = request_digest(request)
        if self.config.mode == MODE_REPLAY:
            return self.store.lookup(digest)
        if self.config.mode == MODE_HYBRID:
            try:
                return self.store.lookup(digest)
            except CacheMiss:
                return self._call_live(request)
        return self._call_live(request)

    def complete_messages(self, messages: list[dict[str, str]]) -> CompletionRecord:
        request = CompletionRequest.build(
            model_id=self.config.model_id or "gpt-3.5-turbo-16k",
            messages=messages,
            temperature=self.config.temperature,
            max_tokens=self.config.max_tokens,
        )
        return self.complete(request)
