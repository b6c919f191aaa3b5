"""Chat-completion backend over HTTP.

Request body: ``{"model", "messages": [{"role", "content"}], "temperature",
"top_p", "n", "max_tokens"}``. Response body: ``{"choices": [{"message":
{"content": ...}}, ...]}``. The API key, if any, is read from the
``HARDGEN_API_KEY`` environment variable and sent as a bearer token.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from typing import Any, Mapping

import httpx

from hardgen.agents import API_KEY_ENV, BackendConfig
from hardgen.errors import BackendUnavailable

log = logging.getLogger(__name__)

_RETRYABLE_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


class HTTPBackend:
    def __init__(self, config: BackendConfig, client: httpx.Client | None = None, sleep=time.sleep):
        self.config = config
        self._slots = threading.BoundedSemaphore(config.max_concurrent)
        self._client = client or httpx.Client(timeout=config.timeout)
        self._sleep = sleep

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> HTTPBackend:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(API_KEY_ENV)
        return {"Authorization": f"Bearer {key}"} if key else {}

    def _post(self, body: dict[str, Any]) -> dict[str, Any]:
        last: str = ""
        for attempt in range(self.config.max_attempts):
            if attempt:
                self._sleep(self.config.backoff_base * 2 ** (attempt - 1))
            try:
                with self._slots:
                    resp = self._client.post(self.config.endpoint, json=body, headers=self._headers())
            except httpx.HTTPError as exc:
                last = f"{type(exc).__name__}: {exc}"
                log.warning("request to %s failed (attempt %d): %s", self.config.endpoint, attempt + 1, last)
                continue
            if resp.status_code in _RETRYABLE_STATUS:
                last = f"HTTP {resp.status_code}"
                log.warning("request to %s returned %s (attempt %d)", self.config.endpoint, last, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise BackendUnavailable(f"{self.config.endpoint} returned HTTP {resp.status_code}")
            try:
                return resp.json()
            except ValueError as exc:
                raise BackendUnavailable(f"non-JSON response from {self.config.endpoint}") from exc
        raise BackendUnavailable(
            f"{self.config.endpoint} unavailable after {self.config.max_attempts} attempts ({last})"
        )

    def complete(self, prompt: str, n: int = 1, context: Mapping[str, Any] | None = None) -> list[str]:
        out: list[str] = []
        # servers that ignore ``n`` return fewer choices; ask again for the rest
        for _ in range(n):
            body = {
                "model": self.config.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": self.config.temperature,
                "top_p": self.config.top_p,
                "n": n - len(out),
                "max_tokens": self.config.max_tokens,
            }
            data = self._post(body)
            try:
                out.extend(str(c["message"]["content"]) for c in data["choices"])
            except (KeyError, TypeError) as exc:
                raise BackendUnavailable(f"malformed completion payload: {exc!r}") from exc
            if len(out) >= n:
                return out[:n]
        raise BackendUnavailable(f"backend returned {len(out)} of {n} requested completions")
