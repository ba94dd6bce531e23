"""Completion clients: the HTTP wire client and a deterministic fake.

Wire contract: POST ``{prompt, max_new_tokens, greedy}`` to the endpoint,
response ``{text, prompt_tokens, completion_tokens}``. The fake client
performs a scripted template transform so the whole pipeline runs offline
and reproducibly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Protocol

import requests


class TransportError(RuntimeError):
    """The completion endpoint could not be reached or answered abnormally."""


@dataclass(frozen=True)
class Completion:
    text: str
    prompt_tokens: int
    completion_tokens: int


class CompletionClient(Protocol):
    def complete(self, prompt: str, max_new_tokens: int, greedy: bool = True) -> Completion:
        ...


def whitespace_token_count(text: str) -> int:
    return len(text.split())


def _truncate_tokens(text: str, max_tokens: int) -> str:
    # Cut after the max_tokens-th whitespace token, preserving original layout.
    count = 0
    for match in re.finditer(r"\S+", text):
        count += 1
        if count == max_tokens:
            return text[: match.end()]
    return text


class HttpCompletionClient:
    """Client for a greedy-decoding completion endpoint."""

    def __init__(self, endpoint: str, timeout: float = 120.0, session: requests.Session | None = None):
        self.endpoint = endpoint
        self.timeout = timeout
        self._session = session or requests.Session()

    def complete(self, prompt: str, max_new_tokens: int, greedy: bool = True) -> Completion:
        if not greedy:
            raise ValueError("only greedy decoding is supported")
        payload = {"prompt": prompt, "max_new_tokens": max_new_tokens, "greedy": True}
        try:
            resp = self._session.post(self.endpoint, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"POST {self.endpoint} failed: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"POST {self.endpoint} returned {resp.status_code}")
        try:
            body = resp.json()
            return Completion(
                text=str(body["text"]),
                prompt_tokens=int(body["prompt_tokens"]),
                completion_tokens=int(body["completion_tokens"]),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise TransportError(f"malformed response from {self.endpoint}: {exc}") from exc


_LINE_COMMENT = {"Python": "#", "Ruby": "#"}

_PROMPT_RE = re.compile(
    r"```\n(?P<code>.*)\n``` from (?P<src>.+?) to (?P<dst>.+?)\. Here is",
    re.DOTALL,
)


def template_translation(code: str, src: str, dst: str) -> str:
    """Deterministic stand-in for LLM translation.

    Whitespace-normalizes each line, drops blanks, rotates the line order by
    one, and prepends a language-appropriate marker comment. The output is a
    learnable transform of the input, not runnable code.
    """
    lines = [" ".join(ln.split()) for ln in code.splitlines()]
    lines = [ln for ln in lines if ln]
    if len(lines) > 1:
        lines = lines[1:] + lines[:1]
    prefix = _LINE_COMMENT.get(dst, "//")
    marker = f"{prefix} auto-translated from {src} to {dst}"
    return "\n".join([marker, *lines])


@dataclass
class FakeCompletionClient:
    """Offline completion client with scripted failure modes.

    ``fail_when`` maps a prompt substring to a failure mode: ``empty``
    (blank completion), ``unterminated`` (missing closing fence), or
    ``transport`` (raises, to exercise retry handling). ``transport_failures``
    bounds how many times each transport failure fires.
    """

    fail_when: dict[str, str] = field(default_factory=dict)
    transport_failures: int = 3
    calls: int = 0

    def complete(self, prompt: str, max_new_tokens: int, greedy: bool = True) -> Completion:
        if not greedy:
            raise ValueError("only greedy decoding is supported")
        self.calls += 1
        prompt_tokens = whitespace_token_count(prompt)

        mode = next((m for sub, m in self.fail_when.items() if sub in prompt), None)
        if mode == "transport":
            if self.transport_failures > 0:
                self.transport_failures -= 1
                raise TransportError("scripted transport failure")
            mode = None
        if mode == "empty":
            return Completion(text="   \n", prompt_tokens=prompt_tokens, completion_tokens=0)

        match = _PROMPT_RE.search(prompt)
        if match is None:
            raise TransportError("prompt does not match the translation template")
        translated = template_translation(match["code"], match["src"], match["dst"])

        if mode == "unterminated":
            text = f"\n{translated}\n"
        else:
            text = f"\n{translated}\n```\n"
        text = _truncate_tokens(text, max_new_tokens)
        return Completion(
            text=text,
            prompt_tokens=prompt_tokens,
            completion_tokens=whitespace_token_count(text),
        )
