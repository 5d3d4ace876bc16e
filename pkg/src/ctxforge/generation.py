"""Text generation backends behind one contract.

Two implementations: a chat-completions HTTP client and an offline stub
resolved from fixture files, so tests and demos never touch the network.

HTTP error table:
    401/403                      -> AuthError (no retry)
    429, 5xx                     -> retried; exhausted -> RateLimited
    transport error or timeout   -> retried; exhausted -> Timeout
    other non-200 status         -> MalformedResponse (no retry)
    200 with unusable body       -> MalformedResponse (no retry)
"""

from __future__ import annotations

import json
import os
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Protocol

import httpx

DEFAULT_MODEL = "gpt-4"
DEFAULT_TEMPERATURE = 0.7
DEFAULT_MAX_OUTPUT_TOKENS = 1024
DEFAULT_TIMEOUT = 60.0

ENV_BASE_URL = "CTXFORGE_BASE_URL"
ENV_API_KEY = "CTXFORGE_API_KEY"


class GenerationError(Exception):
    pass


class AuthError(GenerationError):
    pass


class RateLimited(GenerationError):
    pass


class Timeout(GenerationError):
    pass


class MalformedResponse(GenerationError):
    pass


class StubMiss(GenerationError):
    pass


class FixtureParseError(GenerationError):
    pass


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    model_name: str = DEFAULT_MODEL
    temperature: float = DEFAULT_TEMPERATURE
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    timeout: float = DEFAULT_TIMEOUT
    # Routing hints for offline backends (problem_id, interest,
    # problem_text); the HTTP backend ignores it.
    metadata: Optional[Mapping[str, str]] = None

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must not be empty")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must be within [0, 2]")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class GenerationResult:
    text: str
    latency: float
    backend_id: str
    token_usage: Optional[tuple[int, int]] = None  # (prompt, output)


class Backend(Protocol):
    def generate(self, request: GenerationRequest) -> GenerationResult: ...


FALLBACK_BACKEND_ID = "stub-fallback"


def _fallback_text(interest: str, problem_text: str) -> str:
    # The rewrap must not trip the error-severity checks: no digits in the
    # lead-in, and it may pose a task only when the original poses none
    # (a bare equation requires the variant to ask for something).
    from .mathtext import count_questions

    if count_questions(problem_text).total() == 0:
        return f"Solve this with {interest} in mind. {problem_text}"
    return f"Imagine this in the world of {interest}. {problem_text}"


class StubBackend:
    """Deterministic offline backend keyed by (problem_id, interest).

    With ``fallback`` enabled, unknown keys get the original text behind a
    templated lead-in naming the interest; such results carry the
    ``stub-fallback`` backend id and are routed to human review downstream.
    """

    def __init__(self, entries: Mapping[tuple[str, str], str], fallback: bool = False):
        self.entries = dict(entries)
        self.fallback = fallback

    def generate(self, request: GenerationRequest) -> GenerationResult:
        meta = request.metadata or {}
        key = (meta.get("problem_id", ""), meta.get("interest", ""))
        if key in self.entries:
            return GenerationResult(text=self.entries[key], latency=0.0, backend_id="stub")
        if self.fallback:
            text = _fallback_text(meta.get("interest", ""), meta.get("problem_text", ""))
            return GenerationResult(text=text, latency=0.0, backend_id=FALLBACK_BACKEND_ID)
        raise StubMiss(f"no fixture for problem {key[0]!r} and interest {key[1]!r}")


def stub_from_fixtures(path: str | Path, fallback: bool = False) -> StubBackend:
    """Build a stub backend from {entries: [{problem_id, interest, text}]}."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        entries: dict[tuple[str, str], str] = {}
        for entry in data["entries"]:
            key = (entry["problem_id"], entry["interest"])
            if key in entries:
                raise FixtureParseError(f"duplicate fixture key {key}")
            entries[key] = entry["text"]
    except FixtureParseError:
        raise
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FixtureParseError(f"cannot load fixtures from {path}: {exc}") from exc
    return StubBackend(entries, fallback=fallback)


class _TokenBucket:
    """Minimal rate limiter: at most ``rate`` acquisitions per second."""

    def __init__(self, rate: float):
        self.interval = 1.0 / rate
        self.lock = threading.Lock()
        self.next_free = 0.0

    def acquire(self) -> None:
        with self.lock:
            now = time.monotonic()
            wait = self.next_free - now
            self.next_free = max(self.next_free, now) + self.interval
        if wait > 0:
            time.sleep(wait)


class HttpBackend:
    """Chat-completions client with exponential backoff.

    Backoff: base delay 1s doubling per attempt with +/-20% jitter, at most
    4 attempts, each honoring the request timeout.
    """

    def __init__(
        self,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        max_attempts: int = 4,
        base_delay: float = 1.0,
        backoff_factor: float = 2.0,
        jitter: float = 0.2,
        requests_per_second: Optional[float] = None,
    ):
        self.base_url = (base_url or os.environ.get(ENV_BASE_URL, "")).rstrip("/")
        if not self.base_url:
            raise GenerationError(f"no base URL configured ({ENV_BASE_URL})")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY, "")
        self.max_attempts = max_attempts
        self.base_delay = base_delay
        self.backoff_factor = backoff_factor
        self.jitter = jitter
        self.bucket = _TokenBucket(requests_per_second) if requests_per_second else None

    def _sleep_before_retry(self, attempt: int) -> None:
        delay = self.base_delay * self.backoff_factor ** (attempt - 1)
        delay *= 1 + random.uniform(-self.jitter, self.jitter)
        time.sleep(delay)

    def generate(self, request: GenerationRequest) -> GenerationResult:
        payload = {
            "model": request.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.base_url}/chat/completions"
        started = time.monotonic()
        last_error: Optional[GenerationError] = None
        for attempt in range(1, self.max_attempts + 1):
            if self.bucket:
                self.bucket.acquire()
            try:
                response = httpx.post(url, json=payload, headers=headers, timeout=request.timeout)
            except httpx.TimeoutException as exc:
                last_error = Timeout(f"request timed out after {request.timeout}s: {exc}")
            except httpx.HTTPError as exc:
                last_error = Timeout(f"transport failure: {exc}")
            else:
                if response.status_code in (401, 403):
                    raise AuthError(f"authentication rejected (HTTP {response.status_code})")
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = RateLimited(f"HTTP {response.status_code} from backend")
                elif response.status_code != 200:
                    raise MalformedResponse(f"unexpected HTTP {response.status_code}")
                else:
                    return self._parse(response, time.monotonic() - started)
            if attempt < self.max_attempts:
                self._sleep_before_retry(attempt)
        assert last_error is not None
        raise last_error

    def _parse(self, response: httpx.Response, latency: float) -> GenerationResult:
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise MalformedResponse(f"response body does not match wire schema: {exc}") from exc
        if not isinstance(text, str) or not text:
            raise MalformedResponse("response contained no generated text")
        usage = body.get("usage") or {}
        token_usage = None
        if "prompt_tokens" in usage and "completion_tokens" in usage:
            token_usage = (usage["prompt_tokens"], usage["completion_tokens"])
        return GenerationResult(text=text, latency=latency, backend_id="http", token_usage=token_usage)
