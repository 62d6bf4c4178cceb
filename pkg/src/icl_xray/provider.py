"""Send prompt packages to a vision chat-completion endpoint.

One provider class owns retries, exponential backoff and a shared token
bucket; the wire transport is pluggable, so live HTTP and the scripted
offline mock run the exact same retry/rate-limit code path.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence, Union

import requests

from .errors import (ConfigError, CredentialError, PayloadError,
                     ScriptExhaustedError, TransportError)
from .prompts import ImagePart, PromptPackage, TextPart

TRANSIENT_STATUSES = frozenset({408, 429, 500, 502, 503, 504})
AUTH_STATUSES = frozenset({401, 403})
PAYLOAD_TOO_LARGE = 413

# sentinel status used by transports for network-level timeouts
_TIMEOUT_STATUS = -1


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str = ""
    model: str = "gpt-4-vision"
    timeout_s: float = 120.0
    max_retries: int = 3
    initial_backoff_ms: int = 500
    max_requests_per_minute: int = 60
    temperature: float = 0.0
    credential_env: str = "VLM_API_KEY"

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.max_requests_per_minute <= 0:
            raise ConfigError("max_requests_per_minute must be positive")
        if self.timeout_s <= 0:
            raise ConfigError("timeout_s must be positive")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")

    @classmethod
    def from_json(cls, path: str | Path) -> "ProviderConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read provider config {path}: {exc}") from exc
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"bad provider config field: {exc}") from exc

    def to_record(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "model": self.model,
            "timeout_s": self.timeout_s,
            "max_retries": self.max_retries,
            "initial_backoff_ms": self.initial_backoff_ms,
            "max_requests_per_minute": self.max_requests_per_minute,
            "temperature": self.temperature,
            "credential_env": self.credential_env,
        }


@dataclass(frozen=True)
class ModelResponse:
    text: str
    request_id: str
    latency_ms: float
    attempts: int
    timestamp: float


def encode_request(package: PromptPackage, config: ProviderConfig) -> bytes:
    """Canonical JSON request body; identical packages encode byte-identically."""
    parts = []
    for message in package.messages:
        content = []
        for part in message.parts:
            if isinstance(part, TextPart):
                content.append({"type": "text", "text": part.text})
            elif isinstance(part, ImagePart):
                att = part.attachment
                url = (f"data:{att.media_type};base64,"
                       f"{base64.b64encode(att.data).decode('ascii')}")
                content.append({"type": "image_url", "image_url": {"url": url}})
        parts.append({"role": message.role, "content": content})
    body = {
        "model": config.model,
        "temperature": config.temperature,
        "messages": parts,
    }
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")


class Transport(Protocol):
    def __call__(self, body: bytes, config: ProviderConfig) -> tuple[int, str]:
        """Returns (http status, message text). May raise CredentialError."""


class HttpTransport:
    """POSTs the chat-completions body; bearer token from the environment."""

    def __call__(self, body: bytes, config: ProviderConfig) -> tuple[int, str]:
        token = os.environ.get(config.credential_env, "")
        if not token:
            raise CredentialError(
                f"credential variable {config.credential_env!r} is empty or unset")
        if not config.endpoint:
            raise ConfigError("provider endpoint is not configured")
        try:
            response = requests.post(
                config.endpoint,
                data=body,
                headers={"Authorization": f"Bearer {token}",
                         "Content-Type": "application/json"},
                timeout=config.timeout_s,
            )
        except (requests.Timeout, requests.ConnectionError):
            return (_TIMEOUT_STATUS, "")
        if response.status_code != 200:
            return (response.status_code, response.text)
        return (200, _extract_message_text(response.json()))


def _extract_message_text(payload: dict) -> str:
    message = payload["choices"][0]["message"]
    content = message.get("content", "")
    if isinstance(content, list):  # some providers return typed parts
        return "".join(part.get("text", "") for part in content
                       if isinstance(part, dict) and part.get("type") == "text")
    return content


class TokenBucket:
    """Spaces acquisitions so N calls take at least (N-1)/rate minutes."""

    def __init__(self, rate_per_minute: int,
                 clock: Callable[[], float], sleep: Callable[[float], None]):
        self._interval = 60.0 / rate_per_minute
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_free: float | None = None

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            if self._next_free is None or now >= self._next_free:
                wait = 0.0
                self._next_free = now + self._interval
            else:
                wait = self._next_free - now
                self._next_free += self._interval
        if wait > 0:
            self._sleep(wait)


class ChatProvider:
    """Retrying, rate-limited sender; safe to share across threads."""

    def __init__(self, config: ProviderConfig,
                 transport: Transport | None = None,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self.transport = transport if transport is not None else HttpTransport()
        self._clock = clock
        self._sleep = sleep
        self._limiter = TokenBucket(config.max_requests_per_minute, clock, sleep)

    def send(self, package: PromptPackage) -> ModelResponse:
        body = encode_request(package, self.config)
        request_id = hashlib.sha256(body).hexdigest()[:16]
        backoff_s = self.config.initial_backoff_ms / 1000.0
        started = self._clock()
        last_status: int | None = None

        for attempt in range(1, self.config.max_retries + 2):
            self._limiter.acquire()
            status, text = self.transport(body, self.config)
            if status == 200:
                return ModelResponse(
                    text=text,
                    request_id=request_id,
                    latency_ms=(self._clock() - started) * 1000.0,
                    attempts=attempt,
                    timestamp=time.time(),
                )
            if status in AUTH_STATUSES:
                raise CredentialError(f"endpoint rejected credentials (HTTP {status})")
            if status == PAYLOAD_TOO_LARGE:
                raise PayloadError(
                    f"endpoint rejected request body ({len(body)} bytes)",
                    size_bytes=len(body))
            last_status = status
            if status in TRANSIENT_STATUSES or status == _TIMEOUT_STATUS:
                if attempt <= self.config.max_retries:
                    self._sleep(backoff_s)
                    backoff_s *= 2
                    continue
                break
            break  # non-retryable status

        raise TransportError(
            f"request failed after {min(attempt, self.config.max_retries + 1)} attempts"
            f" (last status {last_status})",
            last_status=last_status)


ScriptEntry = Union[str, int]


@dataclass
class RecordedRequest:
    text: str
    attachment_digests: tuple[str, ...]
    body: bytes


class ScriptTransport:
    """Feeds scripted entries in order and records every request it sees."""

    def __init__(self, script: Sequence[ScriptEntry]):
        if not script:
            raise ConfigError("mock script must be non-empty")
        for entry in script:
            if not isinstance(entry, (str, int)):
                raise ConfigError(f"script entries are texts or status codes,"
                                  f" got {type(entry).__name__}")
        self._entries = list(script)
        self._lock = threading.Lock()
        self.requests: list[RecordedRequest] = []

    def __call__(self, body: bytes, config: ProviderConfig) -> tuple[int, str]:
        with self._lock:
            self.requests.append(_record_request(body))
            if not self._entries:
                raise ScriptExhaustedError(
                    f"mock script exhausted after {len(self.requests) - 1} entries")
            entry = self._entries.pop(0)
        if isinstance(entry, int):
            return (entry, "")
        return (200, entry)

    @property
    def remaining(self) -> int:
        return len(self._entries)


def _record_request(body: bytes) -> RecordedRequest:
    payload = json.loads(body.decode("utf-8"))
    texts: list[str] = []
    digests: list[str] = []
    for message in payload.get("messages", []):
        for part in message.get("content", []):
            if part.get("type") == "text":
                texts.append(part["text"])
            elif part.get("type") == "image_url":
                url = part["image_url"]["url"]
                data = base64.b64decode(url.split(",", 1)[1])
                digests.append(hashlib.sha256(data).hexdigest())
    return RecordedRequest(text="\n".join(texts),
                           attachment_digests=tuple(digests), body=body)


def mock_provider(script: Sequence[ScriptEntry],
                  config: ProviderConfig | None = None,
                  clock: Callable[[], float] | None = None,
                  sleep: Callable[[float], None] | None = None) -> ChatProvider:
    """Offline provider driven by a scripted entry list.

    Entries are consumed in request-arrival order, so pair positional
    scripts with serial execution (runner concurrency 1, the default) when
    the response-to-request assignment matters. The script transport is
    reachable as ``provider.transport`` for assertions on recorded
    requests.
    """
    if config is None:
        config = ProviderConfig(endpoint="mock://", max_requests_per_minute=100_000)
    fake_now = [0.0]
    if clock is None:
        clock = lambda: fake_now[0]  # noqa: E731
    if sleep is None:
        sleep = lambda s: fake_now.__setitem__(0, fake_now[0] + s)  # noqa: E731
    return ChatProvider(config, transport=ScriptTransport(script),
                        clock=clock, sleep=sleep)
