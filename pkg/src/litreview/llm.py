"""Chat-completion access: budget gate, retries, call logging, scripted double.

Any endpoint that speaks the common ``{model, messages, temperature,
max_tokens}`` chat shape works; the scripted kind never touches the network.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from collections.abc import Callable, Mapping
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Protocol

logger = logging.getLogger(__name__)

DEFAULT_INPUT_BUDGET = 8000
TRANSIENT_STATUS = frozenset({408, 409, 425, 429, 500, 502, 503, 504})


def estimate_tokens(text: str) -> int:
    """ceil(len/4): cheap, deterministic, and conservative for English."""
    return -(-len(text) // 4)


class BackendError(RuntimeError):
    pass


class BudgetExceededError(BackendError):
    def __init__(self, estimated: int, budget: int) -> None:
        super().__init__(f"request needs ~{estimated} input tokens, budget is {budget}")
        self.estimated = estimated
        self.budget = budget


class RetriesExhaustedError(BackendError):
    def __init__(self, attempts: int, last_status: int | None, detail: str) -> None:
        super().__init__(f"gave up after {attempts} attempts (last status {last_status}): {detail}")
        self.attempts = attempts
        self.last_status = last_status


class ScriptMissError(BackendError):
    def __init__(self, digest: str) -> None:
        super().__init__(f"no scripted response for request digest {digest}")
        self.digest = digest


class TransportError(Exception):
    """Raised by transports for connection-level failures; always retried."""


class BackendKind(str, Enum):
    REMOTE = "remote"
    SCRIPTED = "scripted"


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_base: float = 1.0

    def delay(self, attempt: int) -> float:
        """Seconds to wait after failed attempt number ``attempt`` (1-based)."""
        return self.backoff_base * 2 ** (attempt - 1)


@dataclass(frozen=True)
class BackendProfile:
    kind: BackendKind = BackendKind.SCRIPTED
    model_id: str = "scripted"
    endpoint: str | None = None
    credential_env: str | None = None
    input_token_budget: int = DEFAULT_INPUT_BUDGET
    retry: RetryPolicy = RetryPolicy()
    template_version: str = "v1"
    max_in_flight: int = 4
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self) -> None:
        if self.input_token_budget <= 0:
            raise ValueError("input_token_budget must be positive")
        if self.kind is BackendKind.REMOTE and not self.endpoint:
            raise ValueError("remote profiles need an endpoint")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> BackendProfile:
        data = dict(data)
        retry = RetryPolicy(**data.pop("retry", {}))
        kind = BackendKind(data.pop("kind", "scripted"))
        return cls(kind=kind, retry=retry, **data)


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self) -> None:
        for m in self.messages:
            if m.role not in ("system", "user"):
                raise ValueError(f"unsupported role {m.role!r}")
        if not any(m.role == "user" for m in self.messages):
            raise ValueError("a request needs at least one user message")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    @classmethod
    def for_prompt(
        cls, profile: BackendProfile, user: str, system: str | None = None
    ) -> ChatRequest:
        messages = [ChatMessage("user", user)]
        if system:
            messages.insert(0, ChatMessage("system", system))
        return cls(profile.model_id, tuple(messages), profile.temperature, profile.max_output_tokens)

    @property
    def content(self) -> str:
        return "".join(m.content for m in self.messages)

    @property
    def last_user_message(self) -> str:
        return next(m.content for m in reversed(self.messages) if m.role == "user")

    def payload(self) -> dict[str, Any]:
        return {
            "model": self.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_output_tokens,
        }

    def digest(self) -> str:
        canonical = json.dumps(self.payload(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ChatResponse:
    content: str
    input_token_count: int
    output_token_count: int
    finish_reason: str = "completed"
    attempts: int = 1

    @property
    def truncated(self) -> bool:
        return self.finish_reason == "truncated"


# --------------------------------------------------------------------------
# Transports


class Transport(Protocol):
    def __call__(
        self, url: str, headers: Mapping[str, str], payload: Mapping[str, Any]
    ) -> tuple[int, Any]: ...


class HttpTransport:
    """Blocking JSON POST over httpx."""

    def __init__(self, timeout: float = 120.0) -> None:
        self.timeout = timeout

    def __call__(self, url, headers, payload):
        import httpx

        try:
            resp = httpx.post(url, headers=dict(headers), json=dict(payload), timeout=self.timeout)
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        try:
            body = resp.json()
        except ValueError:
            body = {"error": resp.text}
        return resp.status_code, body


@dataclass
class RecordingTransport:
    """Wraps a transport (or nothing) and records every call that reaches it."""

    inner: Transport | None = None
    calls: list[dict[str, Any]] = field(default_factory=list)

    def __call__(self, url, headers, payload):
        self.calls.append({"url": url, "payload": dict(payload)})
        if self.inner is None:
            raise TransportError("recording transport has no inner transport")
        return self.inner(url, headers, payload)


# --------------------------------------------------------------------------
# Scripted double

Transform = Callable[[ChatRequest], str]


def echo_transform(chars: int = 40) -> Transform:
    def echo(request: ChatRequest) -> str:
        return request.last_user_message[:chars]

    return echo


@dataclass(frozen=True)
class Script:
    responses: Mapping[str, str] = field(default_factory=dict)
    default: Transform | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> Script:
        """Load ``{"responses": {digest: text}, "default": "echo:40" | "structured"}``."""
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data.get("responses", {}), named_transform(data.get("default")))


def named_transform(name: str | None) -> Transform | None:
    if name is None:
        return None
    if name.startswith("echo"):
        _, _, n = name.partition(":")
        return echo_transform(int(n) if n else 40)
    if name == "structured":
        from .offline import structured_responder

        return structured_responder
    raise ValueError(f"unknown scripted default {name!r}")


def respond_scripted(request: ChatRequest, script: Script) -> ChatResponse:
    digest = request.digest()
    if digest in script.responses:
        content = script.responses[digest]
    elif script.default is not None:
        content = script.default(request)
    else:
        raise ScriptMissError(digest)
    return ChatResponse(
        content=content,
        input_token_count=estimate_tokens(request.content),
        output_token_count=estimate_tokens(content),
        finish_reason="completed" if content else "truncated",
    )


# --------------------------------------------------------------------------
# Client


@dataclass(frozen=True)
class CallRecord:
    digest: str
    model_id: str
    input_tokens: int
    output_tokens: int
    attempts: int
    finish_reason: str
    latency_s: float
    tags: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self) | {"tags": dict(self.tags)}


class CallLog:
    """Append-only, thread-safe record of backend calls."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._records: list[CallRecord] = []

    def append(self, record: CallRecord) -> None:
        with self._lock:
            self._records.append(record)

    @property
    def records(self) -> list[CallRecord]:
        with self._lock:
            return list(self._records)


class LLMClient:
    """Shareable client; a semaphore caps in-flight requests per profile."""

    def __init__(
        self,
        profile: BackendProfile,
        *,
        transport: Transport | None = None,
        script: Script | None = None,
        log: CallLog | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if profile.kind is BackendKind.SCRIPTED and script is None:
            raise ValueError("scripted profile needs a script")
        self.profile = profile
        self.transport = transport if transport is not None else HttpTransport()
        self.script = script
        self.log = log if log is not None else CallLog()
        self.sleep = sleep
        self._gate = threading.BoundedSemaphore(max(1, profile.max_in_flight))

    def request(self, user: str, system: str | None = None) -> ChatRequest:
        return ChatRequest.for_prompt(self.profile, user, system)

    def complete(self, request: ChatRequest, **tags: Any) -> ChatResponse:
        estimated = estimate_tokens(request.content)
        if estimated > self.profile.input_token_budget:
            raise BudgetExceededError(estimated, self.profile.input_token_budget)
        started = time.perf_counter()
        with self._gate:
            if self.profile.kind is BackendKind.SCRIPTED:
                response = respond_scripted(request, self.script)
            else:
                response = self._complete_remote(request)
        if response.truncated:
            logger.warning("completion truncated for request %s", request.digest()[:12])
        self.log.append(
            CallRecord(
                digest=request.digest(),
                model_id=request.model_id,
                input_tokens=response.input_token_count,
                output_tokens=response.output_token_count,
                attempts=response.attempts,
                finish_reason=response.finish_reason,
                latency_s=round(time.perf_counter() - started, 6),
                tags=tags,
            )
        )
        return response

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.profile.credential_env:
            key = os.environ.get(self.profile.credential_env)
            if not key:
                raise BackendError(f"environment variable {self.profile.credential_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _complete_remote(self, request: ChatRequest) -> ChatResponse:
        policy = self.profile.retry
        headers = self._headers()
        last_status: int | None = None
        detail = ""
        for attempt in range(1, policy.max_attempts + 1):
            try:
                status, body = self.transport(self.profile.endpoint, headers, request.payload())
            except TransportError as exc:
                status, body, detail = None, None, str(exc)
            last_status = status
            if status == 200:
                return _parse_completion(body, request, attempt)
            if status is not None:
                detail = json.dumps(body)[:500]
                if status not in TRANSIENT_STATUS:
                    raise BackendError(f"endpoint returned {status}: {detail}")
            if attempt < policy.max_attempts:
                delay = policy.delay(attempt)
                logger.warning("attempt %d failed (%s); retrying in %.1fs", attempt, status, delay)
                self.sleep(delay)
        raise RetriesExhaustedError(policy.max_attempts, last_status, detail)


def _parse_completion(body: Any, request: ChatRequest, attempts: int) -> ChatResponse:
    try:
        choice = body["choices"][0]
        content = choice["message"]["content"] or ""
    except (KeyError, IndexError, TypeError) as exc:
        raise BackendError(f"malformed completion body: {str(body)[:200]}") from exc
    usage = body.get("usage") or {}
    finish = "truncated" if choice.get("finish_reason") == "length" or not content else "completed"
    return ChatResponse(
        content=content,
        input_token_count=int(usage.get("prompt_tokens", estimate_tokens(request.content))),
        output_token_count=int(usage.get("completion_tokens", estimate_tokens(content))),
        finish_reason=finish,
        attempts=attempts,
    )


def complete(
    request: ChatRequest,
    profile: BackendProfile,
    *,
    transport: Transport | None = None,
    script: Script | None = None,
    log: CallLog | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> ChatResponse:
    """One-shot convenience wrapper around :class:`LLMClient`."""
    client = LLMClient(profile, transport=transport, script=script, log=log, sleep=sleep)
    return client.complete(request)
