"""HTTP client for local LLM inference servers, with the retry-discard policy.

One item (an essay to segment, an argument to classify) gets at most five
completion attempts. Each raw completion runs through a validator; the first
success wins, the fifth rejection discards the item. Transport problems are
not format problems: they draw from a separate, configurable budget so a
flaky connection cannot eat the five format attempts.

The wire protocol speaks to Ollama-style /api/generate endpoints by default
and to OpenAI-compatible chat-completion endpoints with api="openai-chat".
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field, replace
from typing import Callable, Union

import httpx

from .parsing import REJECTION_ERRORS
from .prompts import Prompt

MAX_ATTEMPTS = 5

ENDPOINT_ENV_VAR = "ARGMINE_ENDPOINT"


class TransportError(RuntimeError):
    """Connection, timeout, or non-success HTTP status."""


@dataclass(frozen=True)
class ModelConfig:
    endpoint: str = "http://127.0.0.1:11434"
    model: str = "llama3.1:8b"
    api: str = "ollama"  # "ollama" | "openai-chat"
    temperature: float = 0.0
    seed: int | None = None
    max_output_tokens: int = 4096
    timeout: float = 120.0
    auth_token: str | None = None
    transport_retries: int = 2

    def __post_init__(self) -> None:
        if not self.model:
            raise ValueError("model name must be nonempty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.api not in ("ollama", "openai-chat"):
            raise ValueError(f"unknown api flavor {self.api!r}")

    def with_seed(self, seed: int | None) -> "ModelConfig":
        return replace(self, seed=seed)

    @staticmethod
    def resolve_endpoint(endpoint: str | None) -> str:
        return os.environ.get(ENDPOINT_ENV_VAR) or endpoint or ModelConfig().endpoint


@dataclass(frozen=True)
class Valid:
    value: object
    attempts: int
    raw: str


@dataclass(frozen=True)
class Discarded:
    last_raw: str
    attempts: int
    last_error: str


@dataclass(frozen=True)
class TransportFailed:
    error: str


CompletionOutcome = Union[Valid, Discarded, TransportFailed]


@dataclass
class ClientStats:
    """Thread-safe tallies for the conservation checks."""

    requests: int = 0
    discards: int = 0
    transport_failures: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def bump(self, attr: str, amount: int = 1) -> None:
        with self._lock:
            setattr(self, attr, getattr(self, attr) + amount)


class InferenceClient:
    """Shareable across threads; in-flight requests bounded by `parallelism`."""

    def __init__(
        self,
        config: ModelConfig,
        transport: httpx.BaseTransport | None = None,
        parallelism: int = 4,
    ):
        self.config = config
        self.stats = ClientStats()
        self._semaphore = threading.BoundedSemaphore(max(1, parallelism))
        headers = {}
        if config.auth_token:
            headers["Authorization"] = f"Bearer {config.auth_token}"
        self._client = httpx.Client(timeout=config.timeout, transport=transport, headers=headers)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "InferenceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # --- protocol ------------------------------------------------------------

    def _url(self) -> str:
        base = self.config.endpoint.rstrip("/")
        path = httpx.URL(base).path
        if path in ("", "/"):
            suffix = "/api/generate" if self.config.api == "ollama" else "/v1/chat/completions"
            return base + suffix
        return base

    def _payload(self, body: str, seed: int | None) -> dict:
        cfg = self.config
        if cfg.api == "ollama":
            options: dict = {
                "temperature": cfg.temperature,
                "num_predict": cfg.max_output_tokens,
            }
            if seed is not None:
                options["seed"] = seed
            return {"model": cfg.model, "prompt": body, "stream": False, "options": options}
        payload = {
            "model": cfg.model,
            "messages": [{"role": "user", "content": body}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_output_tokens,
        }
        if seed is not None:
            payload["seed"] = seed
        return payload

    @staticmethod
    def _extract_text(api: str, data: dict) -> str:
        try:
            if api == "ollama":
                return data["response"]
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion response: {exc}") from exc

    def complete(self, prompt: Prompt | str, seed: int | None = None) -> str:
        """One completion request; returns the model's text verbatim."""
        body = prompt.body if isinstance(prompt, Prompt) else prompt
        seed = self.config.seed if seed is None else seed
        with self._semaphore:
            self.stats.bump("requests")
            try:
                response = self._client.post(self._url(), json=self._payload(body, seed))
            except httpx.HTTPError as exc:
                raise TransportError(f"{type(exc).__name__}: {exc}") from exc
        if response.status_code // 100 != 2:
            raise TransportError(f"HTTP {response.status_code}: {response.text[:200]}")
        return self._extract_text(self.config.api, response.json())

    def complete_validated(
        self,
        prompt: Prompt | str,
        validator: Callable[[str], object],
        seed: int | None = None,
    ) -> CompletionOutcome:
        """Up to MAX_ATTEMPTS completions; first validator success wins.

        Five rejections discard the item (the identical prompt is re-sent each
        time). Transport errors draw from config.transport_retries and, once
        that budget is spent, surface as TransportFailed without consuming the
        remaining format attempts.
        """
        transport_budget = self.config.transport_retries
        raw = ""
        last_error = ""
        attempts = 0
        while attempts < MAX_ATTEMPTS:
            try:
                raw = self.complete(prompt, seed=seed)
            except TransportError as exc:
                if transport_budget <= 0:
                    self.stats.bump("transport_failures")
                    return TransportFailed(error=str(exc))
                transport_budget -= 1
                continue
            attempts += 1
            try:
                value = validator(raw)
            except REJECTION_ERRORS as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                continue
            return Valid(value=value, attempts=attempts, raw=raw)
        self.stats.bump("discards")
        return Discarded(last_raw=raw, attempts=attempts, last_error=last_error)
