from __future__ import annotations

import json

import httpx
import pytest

from affordbench.backends import make_backend
from affordbench.backends.base import BackendError, CompletionRequest
from affordbench.backends.remote import RemoteBackend

REQ = CompletionRequest("system text", "user text", max_tokens=64)


def ok(content: str = "hello") -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})


def backend(handler, monkeypatch, **kw):
    monkeypatch.setenv("TEST_KEY", "sk-secret")
    sleeps: list[float] = []
    be = RemoteBackend(
        "https://models.example/v1/",
        "test-model",
        api_key_env="TEST_KEY",
        client=httpx.Client(transport=httpx.MockTransport(handler)),
        sleep=sleeps.append,
        **kw,
    )
    return be, sleeps


def test_request_shape(monkeypatch):
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["url"] = str(request.url)
        seen["auth"] = request.headers["authorization"]
        seen["body"] = json.loads(request.content)
        return ok("done")

    be, sleeps = backend(handler, monkeypatch)
    assert be.complete(REQ) == "done"
    assert seen["url"] == "https://models.example/v1/chat/completions"
    assert seen["auth"] == "Bearer sk-secret"
    assert seen["body"]["model"] == "test-model"
    assert seen["body"]["temperature"] == 0.0
    assert [m["role"] for m in seen["body"]["messages"]] == ["system", "user"]
    assert sleeps == []


@pytest.mark.parametrize("status", [429, 500, 503])
def test_retries_then_succeeds(monkeypatch, status):
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(status) if len(calls) < 3 else ok()

    be, sleeps = backend(handler, monkeypatch, backoff=0.5)
    assert be.complete(REQ) == "hello"
    assert len(calls) == 3
    assert sleeps == [0.5, 1.0]


def test_gives_up_after_four_attempts(monkeypatch):
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(502)

    be, sleeps = backend(handler, monkeypatch)
    with pytest.raises(BackendError, match="4 attempts"):
        be.complete(REQ)
    assert len(calls) == 4
    assert sleeps == [1.0, 2.0, 4.0]


def test_transport_errors_are_retried(monkeypatch):
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) == 1:
            raise httpx.ConnectError("refused", request=request)
        return ok()

    be, _ = backend(handler, monkeypatch)
    assert be.complete(REQ) == "hello"


def test_client_errors_are_not_retried(monkeypatch):
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(401, text="bad key")

    be, _ = backend(handler, monkeypatch)
    with pytest.raises(BackendError, match="401"):
        be.complete(REQ)
    assert len(calls) == 1


def test_malformed_payload(monkeypatch):
    be, _ = backend(lambda r: httpx.Response(200, json={"choices": []}), monkeypatch)
    with pytest.raises(BackendError, match="malformed"):
        be.complete(REQ)


def test_missing_key(monkeypatch):
    monkeypatch.delenv("NO_SUCH_KEY", raising=False)
    with pytest.raises(BackendError, match="NO_SUCH_KEY"):
        RemoteBackend("https://x", "m", api_key_env="NO_SUCH_KEY")


def test_describe_hides_key(monkeypatch):
    be, _ = backend(lambda r: ok(), monkeypatch)
    assert "sk-secret" not in json.dumps(be.describe())


def test_make_backend():
    assert make_backend("oracle").name == "oracle"
    with pytest.raises(ValueError):
        make_backend("remote")
    with pytest.raises(ValueError):
        make_backend("carrier-pigeon")
