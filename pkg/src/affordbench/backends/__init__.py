from __future__ import annotations

from typing import Optional

from .base import Backend, BackendError, CompletionRequest
from .oracle import OracleBackend


def make_backend(kind: str, endpoint: Optional[str] = None, model: Optional[str] = None, **kw) -> Backend:
    if kind == "oracle":
        return OracleBackend()
    if kind == "remote":
        from .remote import RemoteBackend

        if not endpoint or not model:
            raise ValueError("the remote backend needs --endpoint and --model")
        return RemoteBackend(endpoint, model, **kw)
    raise ValueError(f"unknown backend {kind!r}")


__all__ = ["Backend", "BackendError", "CompletionRequest", "OracleBackend", "make_backend"]
