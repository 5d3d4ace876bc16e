import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from ctxforge.generation import (
    AuthError,
    FixtureParseError,
    GenerationRequest,
    HttpBackend,
    MalformedResponse,
    RateLimited,
    StubBackend,
    StubMiss,
    Timeout,
    stub_from_fixtures,
)

from conftest import PAPER_FIXTURES


def ok_body(text="rewritten problem", prompt_tokens=10, completion_tokens=5):
    return {
        "choices": [{"message": {"content": text}}],
        "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens},
    }


class ScriptedServer:
    """Serves a fixed sequence of (status, body) responses and counts hits."""

    def __init__(self, script, delay=0.0):
        self.script = script
        self.delay = delay
        self.hits = 0
        self.requests = []
        self.lock = threading.Lock()
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                payload_in = self.rfile.read(length) if length else b""
                with outer.lock:
                    index = min(outer.hits, len(outer.script) - 1)
                    outer.hits += 1
                    try:
                        outer.requests.append(
                            (self.path, dict(self.headers), json.loads(payload_in))
                        )
                    except ValueError:
                        outer.requests.append((self.path, dict(self.headers), None))
                if outer.delay:
                    time.sleep(outer.delay)
                status, body = outer.script[index]
                payload = json.dumps(body).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()

    @property
    def url(self):
        host, port = self.server.server_address
        return f"http://{host}:{port}"


def fast_backend(url, **kwargs):
    return HttpBackend(base_url=url, api_key="test-key", base_delay=0.01, **kwargs)


REQUEST = GenerationRequest(prompt="rewrite this", timeout=2.0)


# ---------------------------------------------------------------------------
# stub backend
# ---------------------------------------------------------------------------

def test_stub_resolves_paper_fixture(paper_stub, paper_variants):
    request = GenerationRequest(
        prompt="whatever",
        metadata={"problem_id": "cd-album", "interest": "TikTok"},
    )
    result = paper_stub.generate(request)
    assert result.text == paper_variants[("cd-album", "TikTok")]
    assert result.backend_id == "stub"
    # Determinism.
    assert paper_stub.generate(request) == paper_stub.generate(request)


def test_stub_miss_without_fallback(paper_stub):
    request = GenerationRequest(prompt="x", metadata={"problem_id": "nope", "interest": "nah"})
    with pytest.raises(StubMiss):
        paper_stub.generate(request)


def test_stub_fallback_rewraps_original():
    backend = StubBackend({}, fallback=True)
    request = GenerationRequest(
        prompt="x",
        metadata={"problem_id": "p", "interest": "chess", "problem_text": "2x + 3 = 15"},
    )
    result = backend.generate(request)
    assert result.backend_id == "stub-fallback"
    assert "chess" in result.text
    assert "2x + 3 = 15" in result.text


def test_stub_fixture_file_loads():
    backend = stub_from_fixtures(PAPER_FIXTURES / "stub_fixtures.json")
    assert len(backend.entries) == 4


def test_stub_fixture_duplicate_key_rejected(tmp_path):
    path = tmp_path / "fixtures.json"
    entry = {"problem_id": "p", "interest": "i", "text": "t"}
    path.write_text(json.dumps({"entries": [entry, entry]}))
    with pytest.raises(FixtureParseError):
        stub_from_fixtures(path)


def test_stub_fixture_bad_schema_rejected(tmp_path):
    path = tmp_path / "fixtures.json"
    path.write_text(json.dumps({"rows": []}))
    with pytest.raises(FixtureParseError):
        stub_from_fixtures(path)


def test_request_validation():
    with pytest.raises(ValueError):
        GenerationRequest(prompt="")
    with pytest.raises(ValueError):
        GenerationRequest(prompt="x", timeout=0)
    with pytest.raises(ValueError):
        GenerationRequest(prompt="x", temperature=3.0)


# ---------------------------------------------------------------------------
# HTTP backend
# ---------------------------------------------------------------------------

def test_http_echo():
    with ScriptedServer([(200, ok_body("the rewrite"))]) as server:
        result = fast_backend(server.url).generate(REQUEST)
    assert result.text == "the rewrite"
    assert result.backend_id == "http"
    assert result.token_usage == (10, 5)
    assert server.hits == 1


def test_http_wire_request_shape():
    request = GenerationRequest(
        prompt="rewrite this", model_name="gpt-4", temperature=0.7,
        max_output_tokens=1024, timeout=2.0,
    )
    with ScriptedServer([(200, ok_body())]) as server:
        fast_backend(server.url).generate(request)
    path, headers, body = server.requests[0]
    assert path == "/chat/completions"
    assert headers["Authorization"] == "Bearer test-key"
    assert body == {
        "model": "gpt-4",
        "messages": [{"role": "user", "content": "rewrite this"}],
        "temperature": 0.7,
        "max_tokens": 1024,
    }


def test_http_takes_first_choice():
    body = {
        "choices": [
            {"message": {"content": "first"}},
            {"message": {"content": "second"}},
        ]
    }
    with ScriptedServer([(200, body)]) as server:
        result = fast_backend(server.url).generate(REQUEST)
    assert result.text == "first"
    assert result.token_usage is None


def test_http_retries_429_then_succeeds():
    with ScriptedServer([(429, {}), (200, ok_body())]) as server:
        result = fast_backend(server.url).generate(REQUEST)
    assert server.hits == 2
    assert result.text == "rewritten problem"


def test_http_persistent_500_exhausts_as_rate_limited():
    with ScriptedServer([(500, {})]) as server:
        with pytest.raises(RateLimited):
            fast_backend(server.url).generate(REQUEST)
    assert server.hits == 4


def test_http_auth_error_not_retried():
    with ScriptedServer([(401, {})]) as server:
        with pytest.raises(AuthError):
            fast_backend(server.url).generate(REQUEST)
    assert server.hits == 1


def test_http_malformed_body_not_retried():
    with ScriptedServer([(200, {"unexpected": True})]) as server:
        with pytest.raises(MalformedResponse):
            fast_backend(server.url).generate(REQUEST)
    assert server.hits == 1


def test_http_timeout_classification():
    request = GenerationRequest(prompt="x", timeout=0.05)
    with ScriptedServer([(200, ok_body())], delay=0.4) as server:
        with pytest.raises(Timeout):
            fast_backend(server.url).generate(request)
    assert server.hits == 4


def test_http_requires_base_url(monkeypatch):
    monkeypatch.delenv("CTXFORGE_BASE_URL", raising=False)
    with pytest.raises(Exception):
        HttpBackend()


def test_http_reads_environment(monkeypatch):
    monkeypatch.setenv("CTXFORGE_BASE_URL", "http://example.invalid/v1/")
    monkeypatch.setenv("CTXFORGE_API_KEY", "secret")
    backend = HttpBackend()
    assert backend.base_url == "http://example.invalid/v1"
    assert backend.api_key == "secret"
