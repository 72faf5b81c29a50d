"""LLM completion backends: a generic HTTP client plus record/replay.

All backends implement ``complete(request) -> CompletionResult``. Replay is
keyed by a fingerprint of the prompt and sampling parameters only, so
cassettes survive refactors that keep prompts stable, and reruns are
bit-deterministic regardless of wall clock or ordering.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Protocol, Union


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    max_tokens: int = 256
    temperature: float = 0.0
    stop_sequences: tuple[str, ...] = ()
    tag: str = ""  # domain_detect | state | response (telemetry only)

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be > 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def fingerprint(self) -> str:
        payload = json.dumps({
            "prompt": self.prompt,
            "max_tokens": self.max_tokens,
            "temperature": float(self.temperature),
            "stop_sequences": list(self.stop_sequences),
        }, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CompletionResult:
    text: str
    latency: float = 0.0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    backend_id: str = ""

    def to_dict(self) -> dict:
        return {"text": self.text, "latency": self.latency,
                "prompt_tokens": self.prompt_tokens,
                "completion_tokens": self.completion_tokens,
                "backend_id": self.backend_id}

    @classmethod
    def from_dict(cls, data: Mapping) -> "CompletionResult":
        return cls(text=data.get("text", ""),
                   latency=float(data.get("latency", 0.0)),
                   prompt_tokens=int(data.get("prompt_tokens", 0)),
                   completion_tokens=int(data.get("completion_tokens", 0)),
                   backend_id=data.get("backend_id", ""))


class Backend(Protocol):
    backend_id: str

    def complete(self, request: CompletionRequest) -> CompletionResult: ...


class TransportError(RuntimeError):
    """Network or protocol failure after retries were exhausted."""


class CassetteMissError(KeyError):
    def __init__(self, fingerprint: str, request: CompletionRequest) -> None:
        self.fingerprint = fingerprint
        head = request.prompt[:80].replace("\n", " ")
        super().__init__(
            f"no recorded completion for fingerprint {fingerprint} "
            f"(tag={request.tag!r}, prompt starts {head!r})")


class ReplayCassette:
    """Fingerprint-keyed map of recorded completions (last write wins)."""

    def __init__(self, records: Optional[Mapping[str, CompletionResult]] = None) -> None:
        self._records: dict[str, CompletionResult] = dict(records or {})

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, fingerprint: str) -> bool:
        return fingerprint in self._records

    def get(self, fingerprint: str) -> Optional[CompletionResult]:
        return self._records.get(fingerprint)

    def put(self, fingerprint: str, result: CompletionResult) -> None:
        self._records[fingerprint] = result

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ReplayCassette":
        records: dict[str, CompletionResult] = {}
        with Path(path).open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                records[entry["fingerprint"]] = CompletionResult.from_dict(
                    entry["result"])
        return cls(records)


class ReplayBackend:
    """Deterministic playback of a recorded cassette.

    In strict mode a miss raises CassetteMissError; otherwise it returns an
    empty completion (callers must handle empty text anyway).
    """

    def __init__(self, cassette: ReplayCassette, strict: bool = True,
                 backend_id: str = "replay") -> None:
        self.cassette = cassette
        self.strict = strict
        self.backend_id = backend_id

    @classmethod
    def from_file(cls, path: Union[str, Path], strict: bool = True) -> "ReplayBackend":
        return cls(ReplayCassette.load(path), strict=strict,
                   backend_id=f"replay:{Path(path).name}")

    def complete(self, request: CompletionRequest) -> CompletionResult:
        result = self.cassette.get(request.fingerprint())
        if result is None:
            if self.strict:
                raise CassetteMissError(request.fingerprint(), request)
            return CompletionResult(text="", backend_id=self.backend_id)
        return result


class RecordingBackend:
    """Forwards to an inner backend and appends every exchange to a cassette
    file, one JSON record per line."""

    def __init__(self, inner: Backend, path: Union[str, Path],
                 prompt_summary_chars: int = 120) -> None:
        self.inner = inner
        self.path = Path(path)
        self.backend_id = f"recording({inner.backend_id})"
        self._lock = threading.Lock()
        self._summary_chars = prompt_summary_chars
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def complete(self, request: CompletionRequest) -> CompletionResult:
        result = self.inner.complete(request)
        record = {
            "fingerprint": request.fingerprint(),
            "request": {
                "prompt_head": request.prompt[:self._summary_chars],
                "prompt_sha256": hashlib.sha256(
                    request.prompt.encode("utf-8")).hexdigest(),
                "max_tokens": request.max_tokens,
                "temperature": float(request.temperature),
                "stop_sequences": list(request.stop_sequences),
                "tag": request.tag,
            },
            "result": result.to_dict(),
        }
        with self._lock, self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
        return result


@dataclass
class HttpBackendConfig:
    base_url: str
    path: str = "/v1/completions"
    # "completion": {"prompt": ...} -> {"choices": [{"text": ...}]}
    # "chat": {"messages": [...]} -> {"choices": [{"message": {"content": ...}}]}
    wire: str = "completion"
    model: Optional[str] = None
    api_key: Optional[str] = None
    auth_header: str = "Authorization"
    auth_scheme: str = "Bearer"
    timeout: float = 60.0
    max_retries: int = 3
    backoff_base: float = 0.5
    max_concurrency: int = 4
    extra_headers: dict[str, str] = field(default_factory=dict)


class HttpBackend:
    """Generic chat/completions HTTP client with retries and a timeout.

    Thread-safe; in-flight requests are capped by a semaphore so paid APIs
    can be rate limited.
    """

    def __init__(self, config: HttpBackendConfig) -> None:
        if config.wire not in ("completion", "chat"):
            raise ValueError(f"unknown wire shape {config.wire!r}")
        self.config = config
        self.backend_id = f"http:{config.base_url.rstrip('/')}{config.path}"
        self._semaphore = threading.Semaphore(config.max_concurrency)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            scheme = (self.config.auth_scheme + " ") if self.config.auth_scheme else ""
            headers[self.config.auth_header] = f"{scheme}{self.config.api_key}"
        headers.update(self.config.extra_headers)
        return headers

    def _body(self, request: CompletionRequest) -> dict:
        body: dict = {
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        }
        if request.stop_sequences:
            body["stop"] = list(request.stop_sequences)
        if self.config.model:
            body["model"] = self.config.model
        if self.config.wire == "chat":
            body["messages"] = [{"role": "user", "content": request.prompt}]
        else:
            body["prompt"] = request.prompt
        return body

    @staticmethod
    def _extract_text(payload: dict, wire: str) -> str:
        choices = payload.get("choices") or []
        if choices:
            choice = choices[0]
            if wire == "chat":
                return (choice.get("message") or {}).get("content", "") or ""
            return choice.get("text", "") or ""
        # Minimal servers may answer {"text": ...} directly.
        return payload.get("text", "") or ""

    def complete(self, request: CompletionRequest) -> CompletionResult:
        import requests

        url = self.config.base_url.rstrip("/") + self.config.path
        last_error: Optional[Exception] = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self.config.backoff_base * (2 ** (attempt - 1)))
            started = time.monotonic()
            try:
                with self._semaphore:
                    response = requests.post(
                        url, json=self._body(request), headers=self._headers(),
                        timeout=self.config.timeout)
                if response.status_code >= 500 or response.status_code == 429:
                    last_error = TransportError(
                        f"{url} answered {response.status_code}")
                    continue
                if response.status_code >= 400:
                    raise TransportError(
                        f"{url} answered {response.status_code}: "
                        f"{response.text[:200]}")
                payload = response.json()
                usage = payload.get("usage") or {}
                return CompletionResult(
                    text=self._extract_text(payload, self.config.wire),
                    latency=time.monotonic() - started,
                    prompt_tokens=int(usage.get("prompt_tokens", 0)),
                    completion_tokens=int(usage.get("completion_tokens", 0)),
                    backend_id=self.backend_id,
                )
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
        raise TransportError(
            f"request to {url} failed after {self.config.max_retries + 1} "
            f"attempts: {last_error}")
