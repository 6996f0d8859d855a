"""Minimal client for an OpenAI-compatible chat-completions endpoint.

Connection settings come from the environment (never from CLI flags):
SRKIT_CHAT_BASE_URL, SRKIT_CHAT_MODEL, SRKIT_CHAT_API_KEY.
"""

from __future__ import annotations

import os
import re
import time
from typing import Callable, Sequence

import httpx

ENV_BASE_URL = "SRKIT_CHAT_BASE_URL"
ENV_MODEL = "SRKIT_CHAT_MODEL"
ENV_API_KEY = "SRKIT_CHAT_API_KEY"

DEFAULT_TIMEOUT = 120.0
DEFAULT_RETRIES = 3
BACKOFF_BASE = 1.0


class ChatBackendError(RuntimeError):
    """The chat backend failed after exhausting retries (or fatally)."""


class ChatClient:
    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        timeout: float = DEFAULT_TIMEOUT,
        max_retries: int = DEFAULT_RETRIES,
        transport: httpx.BaseTransport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.max_retries = max_retries
        self._sleep = sleeper
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    @classmethod
    def from_env(cls, **kwargs) -> "ChatClient":
        base_url = os.environ.get(ENV_BASE_URL)
        model = os.environ.get(ENV_MODEL)
        if not base_url or not model:
            raise ChatBackendError(
                f"chat backend not configured: set {ENV_BASE_URL} and {ENV_MODEL}"
            )
        return cls(base_url, model, api_key=os.environ.get(ENV_API_KEY), **kwargs)

    def complete(self, messages: Sequence[dict], temperature: float = 0.7) -> str:
        """POST one chat completion and return the assistant text. Transport
        failures and 429/5xx responses are retried with exponential backoff."""
        payload = {
            "model": self.model,
            "messages": list(messages),
            "temperature": temperature,
        }
        url = f"{self.base_url}/chat/completions"
        last_error: Exception | None = None
        for attempt in range(1 + self.max_retries):
            if attempt:
                self._sleep(BACKOFF_BASE * 2 ** (attempt - 1))
            try:
                response = self._client.post(url, json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code == 429 or response.status_code >= 500:
                last_error = ChatBackendError(f"HTTP {response.status_code}")
                continue
            if response.status_code >= 400:
                raise ChatBackendError(f"HTTP {response.status_code}: {response.text[:200]}")
            try:
                return response.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise ChatBackendError(f"malformed chat response: {exc}") from exc
        raise ChatBackendError(f"chat backend unreachable after retries: {last_error}")

    def close(self) -> None:
        self._client.close()


_SCORE_RE = re.compile(r"(\d+(?:\.\d+)?|\.\d+)")

JUDGE_PROMPT = (
    "You compare two equation skeletons for structural correspondence.\n"
    "Score their similarity from 0 to 1, where 1 means the same structure.\n"
    "Reply with the number only.\n"
    "Skeleton A: {pred}\n"
    "Skeleton B: {truth}"
)


def judge_form_similarity(client: ChatClient, pred: str, truth: str, temperature: float = 0.0) -> float:
    """Pass-through that asks the chat backend for a 0-1 structural score.

    Provided for side-by-side comparison with the rule-based score; it is not
    part of the evaluation contract.
    """
    reply = client.complete(
        [{"role": "user", "content": JUDGE_PROMPT.format(pred=pred, truth=truth)}],
        temperature=temperature,
    )
    match = _SCORE_RE.search(reply)
    if not match:
        raise ChatBackendError(f"judge reply without a numeric score: {reply[:200]}")
    return min(1.0, max(0.0, float(match.group(1))))
