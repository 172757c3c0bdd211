"""Chat-completions HTTP transport.

Wire format: request {model, messages[{role, content, ...}], temperature,
optional top_p/top_k/seed/tools/n}; response {choices[{message{role,
content, optional tool_calls}}], usage}. Serialization is canonical
(sorted keys, compact separators, trailing newline) so payloads can be
compared byte-for-byte against golden files.

Retries: up to 3 attempts on connection errors and retryable statuses
(429, 5xx), capped exponential backoff with jitter. Anything else fails
fast as a transport error; syntactically bad payloads are protocol errors.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Protocol, Sequence

import httpx

from .base import ProtocolError, SamplingParams, TokenUsage, TransportError

RETRYABLE_STATUSES = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class ToolCallPayload:
    id: str
    name: str
    arguments: str  # JSON-encoded argument object, provider style

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "type": "function",
            "function": {"name": self.name, "arguments": self.arguments},
        }


@dataclass(frozen=True)
class ChatChoice:
    role: str
    content: str | None
    tool_calls: tuple[ToolCallPayload, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        message: dict[str, Any] = {"role": self.role, "content": self.content}
        if self.tool_calls:
            message["tool_calls"] = [tc.to_dict() for tc in self.tool_calls]
        return {"message": message}


@dataclass
class ChatResponse:
    choices: list[ChatChoice]
    usage: TokenUsage = TokenUsage()
    retries: int = 0  # attempts beyond the first that this call needed

    def to_payload(self) -> dict[str, Any]:
        return {
            "choices": [c.to_dict() for c in self.choices],
            "usage": {
                "prompt_tokens": self.usage.prompt_tokens,
                "completion_tokens": self.usage.completion_tokens,
            },
        }


def build_request_payload(
    model: str,
    messages: Sequence[Mapping[str, Any]],
    sampling: SamplingParams,
    tools: Sequence[Mapping[str, Any]] | None = None,
    n: int | None = None,
) -> dict[str, Any]:
    payload: dict[str, Any] = {
        "model": model,
        "messages": [dict(m) for m in messages],
        "temperature": sampling.temperature,
    }
    if sampling.top_p is not None:
        payload["top_p"] = sampling.top_p
    if sampling.top_k is not None:
        payload["top_k"] = sampling.top_k
    if sampling.seed is not None:
        payload["seed"] = sampling.seed
    if tools is not None:
        payload["tools"] = [dict(t) for t in tools]
    if n is not None and n != 1:
        payload["n"] = n
    return payload


def encode_payload(payload: Mapping[str, Any]) -> bytes:
    """Canonical byte form of a wire payload; stable across runs."""
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def parse_response(data: Any) -> ChatResponse:
    if not isinstance(data, Mapping) or "choices" not in data:
        raise ProtocolError("response payload has no choices")
    choices: list[ChatChoice] = []
    for raw in data["choices"]:
        try:
            message = raw["message"]
            tool_calls = tuple(
                ToolCallPayload(
                    id=tc.get("id", f"call_{i}"),
                    name=tc["function"]["name"],
                    arguments=tc["function"].get("arguments", "{}"),
                )
                for i, tc in enumerate(message.get("tool_calls") or ())
            )
            choices.append(
                ChatChoice(
                    role=message.get("role", "assistant"),
                    content=message.get("content"),
                    tool_calls=tool_calls,
                )
            )
        except (KeyError, TypeError) as e:
            raise ProtocolError(f"malformed choice in response: {e}") from e
    if not choices:
        raise ProtocolError("response has an empty choices list")
    usage_raw = data.get("usage") or {}
    usage = TokenUsage(
        prompt_tokens=int(usage_raw.get("prompt_tokens", 0)),
        completion_tokens=int(usage_raw.get("completion_tokens", 0)),
    )
    return ChatResponse(choices=choices, usage=usage)


@dataclass
class ClientStats:
    requests: int = 0
    retries: int = 0
    usage: TokenUsage = TokenUsage()


class ChatClient(Protocol):
    """What adapters need from a completion backend."""

    def complete(
        self,
        messages: Sequence[Mapping[str, Any]],
        sampling: SamplingParams,
        tools: Sequence[Mapping[str, Any]] | None = None,
        n: int | None = None,
    ) -> ChatResponse: ...


class ChatCompletionsClient:
    """Thread-safe for concurrent independent requests."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        backoff_cap: float = 8.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.model = model
        self._headers = {"content-type": "application/json"}
        if api_key:
            self._headers["authorization"] = f"Bearer {api_key}"
        self._max_attempts = max_attempts
        self._backoff_base = backoff_base
        self._backoff_cap = backoff_cap
        self._sleep = sleep
        self._rng = random.Random()
        self._client = httpx.Client(transport=transport, timeout=timeout)
        self.stats = ClientStats()

    def close(self) -> None:
        self._client.close()

    def _backoff(self, attempt: int) -> float:
        base = min(self._backoff_cap, self._backoff_base * (2**attempt))
        return base * (1.0 + 0.25 * self._rng.random())

    def _post_once(self, body: bytes) -> tuple[Any, None] | tuple[None, str]:
        """Returns (data, None) on success, (None, reason) when retryable."""
        try:
            resp = self._client.post(self.endpoint, content=body, headers=self._headers)
        except httpx.HTTPError as e:
            return None, f"connection failure: {e}"
        if resp.status_code in RETRYABLE_STATUSES:
            return None, f"status {resp.status_code}"
        if resp.status_code >= 400:
            raise TransportError(f"request failed with status {resp.status_code}")
        try:
            return resp.json(), None
        except json.JSONDecodeError as e:
            raise ProtocolError(f"response body is not JSON: {e.msg}") from e

    def _post_with_retry(self, payload: Mapping[str, Any]) -> tuple[Any, int]:
        body = encode_payload(payload)
        retries = 0
        last_reason = "no attempts made"
        for attempt in range(self._max_attempts):
            if attempt:
                self._sleep(self._backoff(attempt - 1))
                retries += 1
                self.stats.retries += 1
            self.stats.requests += 1
            data, reason = self._post_once(body)
            if reason is None:
                return data, retries
            last_reason = reason
        raise TransportError(f"giving up after {self._max_attempts} attempts: {last_reason}")

    def complete(
        self,
        messages: Sequence[Mapping[str, Any]],
        sampling: SamplingParams,
        tools: Sequence[Mapping[str, Any]] | None = None,
        n: int | None = None,
    ) -> ChatResponse:
        payload = build_request_payload(self.model, messages, sampling, tools=tools, n=n)
        data, retries = self._post_with_retry(payload)
        response = parse_response(data)
        response.retries = retries

        # Providers may ignore n; top up with independent single requests.
        wanted = n or 1
        while len(response.choices) < wanted:
            extra_payload = build_request_payload(self.model, messages, sampling, tools=tools)
            data, retries = self._post_with_retry(extra_payload)
            extra = parse_response(data)
            response.choices.extend(extra.choices)
            response.usage = response.usage + extra.usage
            response.retries += retries

        self.stats.usage = self.stats.usage + response.usage
        return response
