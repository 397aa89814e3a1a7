"""Chat-completions client for an OpenAI-compatible endpoint."""

from __future__ import annotations

import logging
import os
import threading
import time
from typing import Callable, Optional

import httpx

from .base import BackendError, CompletionRequest

log = logging.getLogger(__name__)

RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504}


class RemoteBackend:
    """Sends each request to ``{endpoint}/chat/completions``.

    Transport errors, 429 and 5xx responses are retried with exponential
    backoff; concurrent calls are capped by a semaphore shared by all
    threads using this instance.
    """

    name = "remote"

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = "OPENAI_API_KEY",
        max_retries: int = 3,
        backoff: float = 1.0,
        max_concurrency: int = 4,
        timeout: float = 60.0,
        client: Optional[httpx.Client] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if not endpoint or not model:
            raise ValueError("remote backend requires both an endpoint and a model")
        key = os.environ.get(api_key_env)
        if not key:
            raise BackendError(f"missing credential: set the {api_key_env} environment variable")
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.max_retries = max_retries
        self.backoff = backoff
        self._key = key
        self._client = client or httpx.Client(timeout=timeout)
        self._sem = threading.BoundedSemaphore(max_concurrency)
        self._sleep = sleep

    def describe(self) -> dict:
        # never log the key itself
        return {"kind": "remote", "endpoint": self.endpoint, "model": self.model, "key_env": self.api_key_env}

    def _payload(self, request: CompletionRequest) -> dict:
        return {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }

    def complete(self, request: CompletionRequest) -> str:
        url = f"{self.endpoint}/chat/completions"
        headers = {"Authorization": f"Bearer {self._key}"}
        last = "no attempt made"
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                with self._sem:
                    resp = self._client.post(url, json=self._payload(request), headers=headers)
            except httpx.HTTPError as exc:
                last = f"transport error: {exc}"
                log.warning("attempt %d: %s", attempt + 1, last)
                continue
            if resp.status_code in RETRY_STATUS or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                log.warning("attempt %d: %s", attempt + 1, last)
                continue
            if resp.status_code >= 400:
                raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"malformed completion payload: {exc}") from None
        raise BackendError(f"gave up after {self.max_retries + 1} attempts: {last}")
