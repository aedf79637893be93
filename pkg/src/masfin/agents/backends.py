"""Completion backends for agent invocation.

The scripted backend is a pure function of the rendered messages plus a
seed: it recovers the context block from the prompt and runs the shared
rule functions.  The chat backend speaks an HTTP chat-completions wire
format with bounded retries and exponential backoff; token usage comes
from the server's own accounting.
"""
from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from typing import Mapping, Protocol

import httpx

from ..errors import (
    BackendTimeout,
    BackendUnavailable,
    MissingEnvironment,
    RetriesExhausted,
)
from .prompts import estimate_tokens
from .rules import run_agent_rules
from .spec import AgentSpec

DEFAULT_CHAT_MODEL = "gpt-4.1-nano"
CHAT_API_KEY_ENV = "CHAT_API_KEY"

_CONTEXT_FENCE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)
_AGENT_MARK = re.compile(r"\[agent:([a-z_][a-z0-9_]*)\]")


@dataclass
class TokenLedger:
    """Cumulative token usage across completion calls."""

    prompt_tokens: int = 0
    completion_tokens: int = 0
    calls: int = 0

    def add(self, prompt: int, completion: int) -> None:
        self.prompt_tokens += prompt
        self.completion_tokens += completion
        self.calls += 1

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def to_dict(self) -> dict:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "total_tokens": self.total_tokens,
            "calls": self.calls,
        }


@dataclass(frozen=True)
class Completion:
    text: str
    prompt_tokens: int
    completion_tokens: int


class AgentBackend(Protocol):
    name: str

    def complete(
        self, agent: AgentSpec, messages: list[dict[str, str]], *, seed: int
    ) -> Completion:
        ...

    def supports_reprompt(self) -> bool:
        ...


def extract_context_block(messages: list[Mapping]) -> dict:
    """Recover the fenced context object from rendered messages."""
    for message in reversed(messages):
        if message.get("role") != "user":
            continue
        for match in _CONTEXT_FENCE.finditer(message.get("content", "")):
            try:
                parsed = json.loads(match.group(1))
            except json.JSONDecodeError:
                continue
            if isinstance(parsed, dict):
                return parsed
    raise ValueError("no fenced context block in messages")


def extract_agent_mark(messages: list[Mapping]) -> str:
    for message in messages:
        if message.get("role") == "system":
            found = _AGENT_MARK.search(message.get("content", ""))
            if found:
                return found.group(1)
    raise ValueError("no [agent:...] marker in system message")


def scripted_response_text(agent_id: str, payload: dict) -> str:
    block = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)
    return (
        f"Deterministic output for {agent_id} follows.\n\n```json\n{block}\n```\n"
    )


@dataclass
class ScriptedBackend:
    """Offline backend: rule evaluation over the prompt's own context block.

    `faults` maps agent ids to named corruptions; a fault stays active for
    every attempt, so a corrupted agent fails its repair retry too.
    """

    faults: dict[str, str] = field(default_factory=dict)
    name: str = "scripted"

    def supports_reprompt(self) -> bool:
        return False

    def complete(
        self, agent: AgentSpec, messages: list[dict[str, str]], *, seed: int
    ) -> Completion:
        context = extract_context_block(messages)
        payload = run_agent_rules(
            agent.agent_id, context, seed, fault=self.faults.get(agent.agent_id)
        )
        text = scripted_response_text(agent.agent_id, payload)
        prompt_tokens = sum(estimate_tokens(m["content"]) for m in messages)
        return Completion(
            text=text,
            prompt_tokens=prompt_tokens,
            completion_tokens=estimate_tokens(text),
        )


@dataclass
class ChatBackend:
    """HTTP chat-completions client with retry, backoff, and usage capture."""

    endpoint: str
    model: str = DEFAULT_CHAT_MODEL
    temperature: float = 0.0
    max_tokens: int = 4096
    api_key_env: str = CHAT_API_KEY_ENV
    retries: int = 3
    backoff_base: float = 0.5
    timeout: float = 30.0
    name: str = "chat"

    def supports_reprompt(self) -> bool:
        return True

    def _api_key(self) -> str:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise MissingEnvironment(
                f"chat backend requires {self.api_key_env} in the environment"
            )
        return key

    def complete(
        self, agent: AgentSpec, messages: list[dict[str, str]], *, seed: int
    ) -> Completion:
        payload = {
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        headers = {"Authorization": f"Bearer {self._api_key()}"}
        last_error: Exception | None = None
        for attempt in range(self.retries):
            if attempt:
                time.sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                response = httpx.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout
                )
            except httpx.TimeoutException as exc:
                last_error = BackendTimeout(f"chat request timed out: {exc}")
                continue
            except httpx.HTTPError as exc:
                last_error = BackendUnavailable(f"chat endpoint unreachable: {exc}")
                continue
            if response.status_code >= 500:
                last_error = BackendUnavailable(
                    f"chat endpoint returned {response.status_code}"
                )
                continue
            if response.status_code >= 400:
                raise BackendUnavailable(
                    f"chat endpoint rejected the request: "
                    f"{response.status_code} {response.text[:200]}"
                )
            return self._parse(response, messages)
        raise RetriesExhausted(
            f"chat backend failed after {self.retries} attempts: {last_error}"
        ) from last_error

    def _parse(self, response: httpx.Response, messages: list[dict[str, str]]) -> Completion:
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise BackendUnavailable(f"malformed completion response: {exc}") from exc
        usage = body.get("usage") or {}
        prompt_tokens = int(usage.get(
            "prompt_tokens", sum(estimate_tokens(m["content"]) for m in messages)
        ))
        completion_tokens = int(usage.get("completion_tokens", estimate_tokens(text)))
        return Completion(
            text=text, prompt_tokens=prompt_tokens, completion_tokens=completion_tokens
        )
