"""LLM clients: chat-completion HTTP service, echo client for offline runs,
and a scripted client for tests, plus a shared call-rate budget.
"""

from __future__ import annotations

import os
import re
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Protocol

import requests

from .errors import LlmUnavailable


class LlmClient(Protocol):
    model_id: str

    def complete(self, prompt: str) -> str: ...


@dataclass
class LlmConfig:
    kind: str = "echo"  # "echo" | "http"
    model_id: str = "echo"
    endpoint: str | None = None
    api_key_env: str = "LITRAG_LLM_API_KEY"
    max_calls_per_minute: int = 0  # 0 = unlimited
    timeout: float = 120.0

    def __post_init__(self):
        if self.kind == "http" and not self.endpoint:
            raise ValueError("http llm requires an endpoint")


class RateBudget:
    """Sliding-window limiter shared by every caller of one client."""

    def __init__(self, max_calls_per_minute: int):
        self.max_calls = max_calls_per_minute
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        if self.max_calls <= 0:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                while self._stamps and now - self._stamps[0] > 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self.max_calls:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            time.sleep(max(wait, 0.01))


class HttpLlmClient:
    """OpenAI-compatible chat completions: {model, messages:[{role,content}]}
    in, {choices:[{message:{content}}]} out. API key via environment."""

    def __init__(self, config: LlmConfig, session: requests.Session | None = None):
        if not config.endpoint:
            raise ValueError("http llm requires an endpoint")
        self.model_id = config.model_id
        self.endpoint = config.endpoint
        self.api_key_env = config.api_key_env
        self.timeout = config.timeout
        self.session = session or requests.Session()
        self.budget = RateBudget(config.max_calls_per_minute)

    def complete(self, prompt: str) -> str:
        self.budget.acquire()
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            resp = self.session.post(
                self.endpoint,
                json={"model": self.model_id,
                      "messages": [{"role": "user", "content": prompt}]},
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise LlmUnavailable(f"llm unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise LlmUnavailable(f"llm returned {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise LlmUnavailable(f"malformed llm response: {exc}") from exc


class EchoLlm:
    """Deterministic offline client. Question-answer prompts are answered
    with the first sentence of their context block; numbered-list requests
    (QA generation) get a derived numbered list. Lets the full pipeline and
    the export tooling run without any external service."""

    model_id = "echo"

    def complete(self, prompt: str) -> str:
        if "numbered list" in prompt:
            return self._numbered_list(prompt)
        context = _extract_block(prompt, "Context:", "Question:")
        for line in context.splitlines():
            line = line.strip().lstrip("• ").strip()
            if line:
                for terminal in (". ", "? ", "! "):
                    cut = line.find(terminal)
                    if cut != -1:
                        return line[:cut + 1]
                return line
        question = _extract_block(prompt, "Question:", "Answer:").strip()
        return f"I don't know the answer to: {question}" if question else "I don't know."

    @staticmethod
    def _numbered_list(prompt: str) -> str:
        m = re.search(r"exactly (\d+)", prompt)
        n = int(m.group(1)) if m else 1
        source = (_extract_block(prompt, "Passage:", "Reply with")
                  or _extract_block(prompt, "Answer:", "Reply with")).strip()
        first = source.split(".")[0].strip() or "this passage"
        return "\n".join(f"{i}. What does the source say about {first.lower()} ({i})?"
                         for i in range(1, n + 1))


class ScriptedLlm:
    """Test double returning queued responses (or a callable of the prompt)."""

    model_id = "scripted"

    def __init__(self, responses: list[str] | Callable[[str], str]):
        self._responses = responses
        self._i = 0
        self.prompts: list[str] = []

    def complete(self, prompt: str) -> str:
        self.prompts.append(prompt)
        if callable(self._responses):
            return self._responses(prompt)
        if self._i >= len(self._responses):
            raise LlmUnavailable("scripted llm exhausted")
        out = self._responses[self._i]
        self._i += 1
        return out


def _extract_block(text: str, start_marker: str, end_marker: str) -> str:
    start = text.find(start_marker)
    if start == -1:
        return ""
    start += len(start_marker)
    end = text.find(end_marker, start)
    return text[start:end if end != -1 else len(text)]


def make_llm(config: LlmConfig) -> LlmClient:
    if config.kind == "echo":
        return EchoLlm()
    if config.kind == "http":
        return HttpLlmClient(config)
    raise ValueError(f"unknown llm kind: {config.kind}")
