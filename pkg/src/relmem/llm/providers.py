"""Completion providers: the single-prompt contract, an HTTP client, a
scripted mock for offline runs, and a tracing wrapper."""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

from ..errors import ConfigError, PromptTooLarge, ProviderUnavailable, UnmatchedPrompt

DEFAULT_MAX_PROMPT_CHARS = 200_000


@runtime_checkable
class CompletionProvider(Protocol):
    name: str
    max_prompt_chars: int

    def complete(self, prompt: str) -> str: ...


def complete(provider: CompletionProvider, prompt: str) -> str:
    """Call ``provider`` with the size and empty-response checks applied."""
    if len(prompt) > provider.max_prompt_chars:
        raise PromptTooLarge(f"prompt has {len(prompt)} chars, {provider.name} accepts {provider.max_prompt_chars}")
    text = provider.complete(prompt)
    if not isinstance(text, str) or not text.strip():
        raise ProviderUnavailable(f"{provider.name} returned an empty completion")
    return text


class HttpCompletionProvider:
    """Client for ``POST /complete {"prompt": ...} -> {"text": ...}``."""

    def __init__(self, base_url: str, timeout: float = 120.0, max_prompt_chars: int = DEFAULT_MAX_PROMPT_CHARS, name: str | None = None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.max_prompt_chars = max_prompt_chars
        self.name = name or f"http:{self.base_url}"
        self._client = httpx.Client(timeout=timeout)

    def complete(self, prompt: str) -> str:
        import httpx

        try:
            resp = self._client.post(f"{self.base_url}/complete", json={"prompt": prompt})
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"{self.name}: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderUnavailable(f"{self.name}: HTTP {resp.status_code}")
        try:
            text = resp.json()["text"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderUnavailable(f"{self.name}: malformed response: {exc}") from exc
        if not isinstance(text, str):
            raise ProviderUnavailable(f"{self.name}: 'text' is not a string")
        return text


@dataclass
class Rule:
    match: str
    response: str
    regex: bool = False
    once: bool = False
    used: bool = False

    def matches(self, prompt: str) -> bool:
        if self.once and self.used:
            return False
        if self.regex:
            return re.search(self.match, prompt, re.DOTALL) is not None
        return self.match in prompt


class ScriptedMock:
    """Replays canned responses chosen by the first rule matching the prompt.

    Rules are tried in order; a ``once`` rule is retired after it fires.  A
    prompt no rule matches raises :class:`UnmatchedPrompt`.
    """

    def __init__(self, rules: list[Rule] | None = None, name: str = "scripted-mock", max_prompt_chars: int = DEFAULT_MAX_PROMPT_CHARS):
        self.rules = list(rules or [])
        self.name = name
        self.max_prompt_chars = max_prompt_chars
        self.calls: list[tuple[str, str]] = []
        self._lock = threading.Lock()

    def add(self, match: str, response: str, *, regex: bool = False, once: bool = False) -> "ScriptedMock":
        self.rules.append(Rule(match, response, regex, once))
        return self

    def complete(self, prompt: str) -> str:
        with self._lock:
            for rule in self.rules:
                if rule.matches(prompt):
                    rule.used = True
                    self.calls.append((prompt, rule.response))
                    return rule.response
        head = prompt.strip().splitlines()[-1][:120] if prompt.strip() else ""
        raise UnmatchedPrompt(f"no scripted rule matches prompt ending with {head!r}")

    @classmethod
    def from_jsonl(cls, path: str | os.PathLike, **kwargs) -> "ScriptedMock":
        rules = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                rules.append(Rule(str(d["match"]), str(d["response"]), bool(d.get("regex", False)), bool(d.get("once", False))))
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad mock rule: {exc}") from exc
        return cls(rules, **kwargs)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"match": r.match, "regex": r.regex, "response": r.response, "once": r.once}, ensure_ascii=False) + "\n"
            for r in self.rules
        )


class TracingProvider:
    """Wraps a provider and appends every prompt/response pair to a JSON-lines file."""

    def __init__(self, inner: CompletionProvider, path: str | os.PathLike):
        self.inner = inner
        self.name = inner.name
        self.max_prompt_chars = inner.max_prompt_chars
        self.path = Path(path)
        self._lock = threading.Lock()

    def complete(self, prompt: str) -> str:
        text = self.inner.complete(prompt)
        line = json.dumps({"type": "completion", "provider": self.name, "prompt": prompt, "response": text}, ensure_ascii=False)
        with self._lock, self.path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
        return text
