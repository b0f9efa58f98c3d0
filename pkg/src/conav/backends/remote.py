"""Chat-completion backend for OpenAI-compatible HTTP endpoints.

Configuration comes from constructor arguments, falling back to the
CONAV_LLM_BASE_URL, CONAV_LLM_API_KEY, and CONAV_LLM_MODEL environment
variables. Requests are sent at temperature 0 and retried with
exponential backoff; failures surface as the BackendFailure taxonomy so
a run records a clean episode failure instead of a stack trace.
"""

from __future__ import annotations

import os
import threading
import time

import httpx

from conav.backends.base import (
    AuthError,
    PlannerBackend,
    PromptDocument,
    RateLimited,
    TransportError,
)

DEFAULT_SYSTEM_TEXT = (
    "You are the planning module of an indoor multi-robot search team. "
    "Read the prompt and reply with exactly one JSON object in the "
    "requested format."
)


class RemoteChatBackend(PlannerBackend):
    """Talks to a /chat/completions endpoint; bounded concurrency."""

    def __init__(self, base_url: str | None = None,
                 api_key: str | None = None,
                 model: str | None = None,
                 timeout: float = 60.0,
                 max_attempts: int = 3,
                 backoff_s: float = 0.5,
                 max_in_flight: int = 4,
                 system_text: str | None = DEFAULT_SYSTEM_TEXT,
                 transport: httpx.BaseTransport | None = None):
        self.base_url = base_url or os.environ.get("CONAV_LLM_BASE_URL")
        if not self.base_url:
            raise ValueError(
                "no endpoint: pass base_url or set CONAV_LLM_BASE_URL")
        self.api_key = api_key or os.environ.get("CONAV_LLM_API_KEY")
        self.model = (model or os.environ.get("CONAV_LLM_MODEL")
                      or "default-model")
        self.max_attempts = max_attempts
        self.backoff_s = backoff_s
        self.system_text = system_text
        self.last_usage: dict | None = None
        self._gate = threading.BoundedSemaphore(max_in_flight)
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        self._client = httpx.Client(base_url=self.base_url, timeout=timeout,
                                    headers=headers, transport=transport)

    def close(self) -> None:
        self._client.close()

    def complete(self, prompt: PromptDocument) -> str:
        messages = []
        if self.system_text:
            messages.append({"role": "system", "content": self.system_text})
        messages.append({"role": "user", "content": prompt.render()})
        body = {"model": self.model, "messages": messages, "temperature": 0}

        last: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                with self._gate:
                    resp = self._client.post("/chat/completions", json=body)
            except httpx.HTTPError as exc:
                last = TransportError(f"request failed: {exc}")
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials "
                                f"(HTTP {resp.status_code})")
            if resp.status_code == 429:
                last = RateLimited("endpoint rate limit (HTTP 429)")
                continue
            if resp.status_code >= 500:
                last = TransportError(f"server error "
                                      f"(HTTP {resp.status_code})")
                continue
            if resp.status_code != 200:
                raise TransportError(f"unexpected HTTP {resp.status_code}: "
                                     f"{resp.text[:200]}")
            return self._extract(resp)
        assert last is not None
        raise last

    def _extract(self, resp: httpx.Response) -> str:
        try:
            data = resp.json()
            self.last_usage = data.get("usage")
            content = data["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise TransportError(f"malformed completion body: {exc}")
        if not isinstance(content, str):
            raise TransportError("completion content is not text")
        return content
