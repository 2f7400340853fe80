"""Completion backends: scripted (offline, deterministic) and OpenAI-compatible HTTP."""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol
from urllib.parse import urlparse

import httpx

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.7
DEFAULT_TOP_P = 1.0
DEFAULT_MAX_TOKENS = 256


class BackendFailure(RuntimeError):
    """A completion could not be obtained. `cause` is machine-readable."""

    def __init__(self, cause: str, detail: str = "", retries: int = 0):
        super().__init__(f"{cause}: {detail}" if detail else cause)
        self.cause = cause
        self.retries = retries


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float = DEFAULT_TEMPERATURE
    top_p: float = DEFAULT_TOP_P
    max_tokens: int = DEFAULT_MAX_TOKENS
    seed: Optional[int] = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


class Backend(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


def complete(backend: Backend, request: CompletionRequest) -> str:
    return backend.complete(request)


@dataclass(frozen=True)
class BackendSpec:
    kind: str = "scripted"  # "scripted" | "http"
    ruleset: str = "default"
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    backoff_base: float = 1.0
    backoff_ceiling: float = 30.0
    max_in_flight: int = 4

    def __post_init__(self):
        if self.kind not in ("scripted", "http"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.kind == "http":
            url = urlparse(self.endpoint)
            if url.scheme not in ("http", "https") or not url.netloc:
                raise ValueError(f"malformed endpoint {self.endpoint!r}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def make_backend(spec: BackendSpec) -> Backend:
    if spec.kind == "scripted":
        from .scripted import ScriptedBackend

        return ScriptedBackend(spec.ruleset)
    return HttpBackend(spec)


# -- HTTP -------------------------------------------------------------------------

def backoff_delays(base: float, ceiling: float, max_retries: int) -> list[float]:
    """Exponential delays base, 2*base, ... truncated so their sum stays within `ceiling`."""
    out, total = [], 0.0
    for i in range(max_retries):
        d = base * (2 ** i)
        if total + d > ceiling:
            d = ceiling - total
        if d <= 0:
            break
        out.append(d)
        total += d
    return out


class HttpBackend:
    """Chat-completions client; the whole prompt goes in one user message.

    The API key is read from the environment on every call and never stored,
    logged or echoed in errors.
    """

    def __init__(self, spec: BackendSpec, sleep: Callable[[float], None] = time.sleep,
                 transport: Optional[httpx.BaseTransport] = None):
        self.spec = spec
        self._sleep = sleep
        self._client = httpx.Client(timeout=spec.timeout, transport=transport)
        self._slots = threading.BoundedSemaphore(max(1, spec.max_in_flight))
        self._local = threading.local()

    @property
    def last_retries(self) -> int:
        return getattr(self._local, "retries", 0)

    def body(self, request: CompletionRequest) -> dict:
        body = {
            "model": self.spec.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "top_p": request.top_p,
            "max_tokens": request.max_tokens,
        }
        if request.seed is not None:
            body["seed"] = request.seed
        return body

    def complete(self, request: CompletionRequest) -> str:
        token = os.environ.get(self.spec.api_key_env)
        if not token:
            raise BackendFailure("auth", f"environment variable {self.spec.api_key_env} is not set")
        headers = {"Authorization": f"Bearer {token}", "Content-Type": "application/json"}
        delays = backoff_delays(self.spec.backoff_base, self.spec.backoff_ceiling, self.spec.max_retries)
        self._local.retries = 0
        last = "exhausted"
        with self._slots:
            for attempt in range(len(delays) + 1):
                if attempt:
                    self._local.retries = attempt
                    self._sleep(delays[attempt - 1])
                try:
                    resp = self._client.post(self.spec.endpoint, json=self.body(request), headers=headers)
                except httpx.TimeoutException:
                    last = "timeout"
                    log.warning("completion request timed out (attempt %d)", attempt + 1)
                    continue
                except httpx.TransportError as exc:
                    last = "transport"
                    log.warning("transport error (attempt %d): %s", attempt + 1, type(exc).__name__)
                    continue
                if resp.status_code in (401, 403):
                    raise BackendFailure("auth", f"HTTP {resp.status_code}", self.last_retries)
                if resp.status_code == 429 or resp.status_code >= 500:
                    last = "rate_limited" if resp.status_code == 429 else "server_error"
                    log.warning("HTTP %d from backend (attempt %d)", resp.status_code, attempt + 1)
                    continue
                if resp.status_code >= 400:
                    raise BackendFailure("http_status", f"HTTP {resp.status_code}", self.last_retries)
                try:
                    return resp.json()["choices"][0]["message"]["content"] or ""
                except (ValueError, KeyError, IndexError, TypeError):
                    raise BackendFailure("bad_response", "no choices[0].message.content", self.last_retries)
        raise BackendFailure(last, f"gave up after {self.last_retries} retries", self.last_retries)


# -- transcript tap ---------------------------------------------------------------

@dataclass
class CallRecord:
    prompt: str
    reply: Optional[str]
    latency_ms: float
    retries: int
    error: Optional[str] = None

    def to_dict(self, with_latency: bool = True) -> dict:
        d = {"prompt": self.prompt, "reply": self.reply, "retries": self.retries, "error": self.error}
        if with_latency:
            d["latency_ms"] = round(self.latency_ms, 3)
        return d


@dataclass
class TranscriptTap:
    """Wraps a backend and appends one CallRecord per completion."""

    inner: Backend
    records: list[CallRecord] = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> str:
        t0 = time.perf_counter()
        try:
            reply = self.inner.complete(request)
        except BackendFailure as exc:
            rec = CallRecord(request.prompt, None, (time.perf_counter() - t0) * 1000, exc.retries, exc.cause)
            with self._lock:
                self.records.append(rec)
            raise
        rec = CallRecord(request.prompt, reply, (time.perf_counter() - t0) * 1000,
                         getattr(self.inner, "last_retries", 0))
        with self._lock:
            self.records.append(rec)
        return reply

    def drain(self) -> list[CallRecord]:
        with self._lock:
            out, self.records = self.records, []
        return out


def transcript_tap(backend: Backend) -> TranscriptTap:
    return TranscriptTap(backend)


class ReplayBackend:
    """Returns logged replies in order; used to re-run recorded HTTP episodes."""

    def __init__(self, replies: list[Optional[str]]):
        self._replies = list(replies)
        self._i = 0

    def complete(self, request: CompletionRequest) -> str:
        if self._i >= len(self._replies):
            raise BackendFailure("replay_exhausted", "no more logged replies")
        reply = self._replies[self._i]
        self._i += 1
        if reply is None:
            raise BackendFailure("replayed_failure")
        return reply
