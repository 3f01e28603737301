"""Chat-completion transports and the two prompt-driven operations.

The pipeline talks to any OpenAI-compatible chat-completions endpoint.  A
recorded transport replays stored responses keyed by a request fingerprint,
which makes every downstream artifact reproducible offline.

Prompt templates ship as data files and are never inlined in code; see
``PromptBundle.load``.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Protocol

import requests

from .interlayer import InterlayerDocument, ParseFailure, parse_document

API_KEY_ENV = "T2BM_API_KEY"
DEFAULT_TIMEOUT = 120.0
DEFAULT_NETWORK_RETRIES = 2
DEFAULT_MAX_ATTEMPTS = 3

_PROMPT_FILES = {
    "refinement_context": "refinement_context.txt",
    "format_spec": "format_spec.txt",
    "background": "background.txt",
}


class TransportError(RuntimeError):
    """The transport could not produce a response."""


class GenerationFailed(RuntimeError):
    """No parseable building came back within the attempt budget."""

    def __init__(self, message: str, responses: list[str]):
        super().__init__(message)
        self.responses = responses


@dataclass(frozen=True)
class PromptBundle:
    refinement_context: str
    format_spec: str
    background: str

    def __post_init__(self) -> None:
        for name in ("refinement_context", "format_spec", "background"):
            if not getattr(self, name).strip():
                raise ValueError(f"prompt bundle part {name!r} is empty")

    @classmethod
    def load(cls, directory: str | Path | None = None) -> "PromptBundle":
        """Load templates from a directory, or the bundled defaults."""
        parts = {}
        for attr, filename in _PROMPT_FILES.items():
            if directory is None:
                text = (
                    resources.files("t2bm.data.prompts")
                    .joinpath(filename)
                    .read_text(encoding="utf-8")
                )
            else:
                text = (Path(directory) / filename).read_text(encoding="utf-8")
            parts[attr] = text
        return cls(**parts)


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 1.0
    max_tokens: int | None = None

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("chat request needs at least one message")

    def to_wire(self) -> dict:
        body: dict = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "temperature": self.temperature,
        }
        if self.max_tokens is not None:
            body["max_tokens"] = self.max_tokens
        return body


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: str = "stop"
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass(frozen=True)
class GenerationTrace:
    """Reproducibility record persisted next to every generated building."""

    raw_input: str
    refined_prompt: str
    interlayer_text: str
    attempts: int
    transport: str
    refine_fallback: bool = False


@dataclass(frozen=True)
class RefineResult:
    text: str
    fallback: bool = False


class Transport(Protocol):
    kind: str

    def complete(self, request: ChatRequest) -> ChatResponse: ...


def request_fingerprint(request: ChatRequest) -> str:
    """Stable sha256 over the canonical wire form of a request."""
    canonical = json.dumps(request.to_wire(), sort_keys=True, ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class HttpChatTransport:
    """Live OpenAI-compatible endpoint; bearer token from the environment.

    The key is read lazily and never stored on traces or included in
    reprs.  Network errors are retried with exponential backoff before
    surfacing as TransportError.
    """

    kind = "live"

    def __init__(
        self,
        base_url: str,
        timeout: float = DEFAULT_TIMEOUT,
        retries: int = DEFAULT_NETWORK_RETRIES,
        session: requests.Session | None = None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self._session = session or requests.Session()

    def __repr__(self) -> str:
        return f"HttpChatTransport(base_url={self.base_url!r})"

    def complete(self, request: ChatRequest) -> ChatResponse:
        url = f"{self.base_url}/chat/completions"
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(2 ** (attempt - 1))
            try:
                resp = self._session.post(
                    url, json=request.to_wire(), headers=headers, timeout=self.timeout
                )
                resp.raise_for_status()
                payload = resp.json()
                choice = payload["choices"][0]
                usage = payload.get("usage") or {}
                return ChatResponse(
                    content=choice["message"]["content"],
                    finish_reason=choice.get("finish_reason", "stop"),
                    prompt_tokens=int(usage.get("prompt_tokens", 0)),
                    completion_tokens=int(usage.get("completion_tokens", 0)),
                )
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_error = exc
        raise TransportError(f"chat completion failed: {last_error}") from last_error


class RecordedTransport:
    """Deterministic replay from a directory of fingerprinted response files."""

    kind = "recorded"

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)

    def __repr__(self) -> str:
        return f"RecordedTransport(root={str(self.root)!r})"

    def _path(self, request: ChatRequest) -> Path:
        return self.root / f"{request_fingerprint(request)}.txt"

    def complete(self, request: ChatRequest) -> ChatResponse:
        path = self._path(request)
        if not path.is_file():
            raise TransportError(f"no recorded response at {path}")
        return ChatResponse(content=path.read_text(encoding="utf-8"))

    def record(self, request: ChatRequest, content: str) -> Path:
        """Store a canned response for ``request``; returns the file path."""
        self.root.mkdir(parents=True, exist_ok=True)
        path = self._path(request)
        path.write_text(content, encoding="utf-8")
        return path


def assemble_refinement_prompt(raw: str, bundle: PromptBundle) -> str:
    return f'User Input = "{raw}"\nContext =\n{bundle.refinement_context}'


def assemble_generation_prompt(refined: str, bundle: PromptBundle) -> str:
    return f"{refined}\n{bundle.format_spec}\n{bundle.background}"


def refine_prompt(
    raw: str,
    bundle: PromptBundle,
    transport: Transport,
    model: str = "gpt-4",
    temperature: float = 1.0,
) -> RefineResult:
    """Expand a terse building description into a detailed one.

    On transport failure the raw text is returned unmodified with the
    fallback flag set, so the pipeline still runs end to end.
    """
    if not raw.strip():
        raise ValueError("refinement input is empty")
    request = ChatRequest(
        model=model,
        messages=(ChatMessage("user", assemble_refinement_prompt(raw, bundle)),),
        temperature=temperature,
    )
    try:
        response = transport.complete(request)
    except TransportError:
        return RefineResult(text=raw, fallback=True)
    return RefineResult(text=response.content)


def generate_interlayer(
    refined: str,
    bundle: PromptBundle,
    transport: Transport,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    model: str = "gpt-4",
    temperature: float = 1.0,
    raw_input: str = "",
) -> tuple[InterlayerDocument, GenerationTrace]:
    """Request a building document, retrying with parse feedback.

    Each failed attempt appends the model reply and the parse error to the
    conversation before asking again.  Raises GenerationFailed with every
    raw response once the attempt budget is spent.
    """
    if not refined.strip():
        raise ValueError("generation prompt is empty")
    if max_attempts < 1:
        raise ValueError("max_attempts must be at least 1")
    messages: list[ChatMessage] = [
        ChatMessage("user", assemble_generation_prompt(refined, bundle))
    ]
    responses: list[str] = []
    failure = ""
    for attempt in range(1, max_attempts + 1):
        request = ChatRequest(
            model=model, messages=tuple(messages), temperature=temperature
        )
        try:
            response = transport.complete(request)
        except TransportError as exc:
            responses.append(f"<transport error: {exc}>")
            failure = str(exc)
            continue
        responses.append(response.content)
        try:
            doc = parse_document(response.content, mode="lenient")
        except ParseFailure as exc:
            failure = str(exc)
            messages.append(ChatMessage("assistant", response.content))
            messages.append(
                ChatMessage(
                    "user",
                    f"The previous reply could not be parsed: {failure}. "
                    "Reply with the corrected building JSON only.",
                )
            )
            continue
        trace = GenerationTrace(
            raw_input=raw_input,
            refined_prompt=refined,
            interlayer_text=response.content,
            attempts=attempt,
            transport=transport.kind,
        )
        return doc, trace
    raise GenerationFailed(
        f"no parseable building after {max_attempts} attempts (last error: {failure})",
        responses,
    )


def mark_fallback(trace: GenerationTrace) -> GenerationTrace:
    return replace(trace, refine_fallback=True)
