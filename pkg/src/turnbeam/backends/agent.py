"""LLM agent adapters.

Both adapters drive the same loop: ask the model for its next move,
execute any validated tool call through the scenario's serving functions,
feed the result (or the validation error) back, and stop once the model
addresses the customer directly. Invalid calls are recorded as error
events and surfaced to the model; the turn carries on. A step limit bounds
runaway turns; hitting it marks the response truncated.

The two adapters differ only in wire format: action-formatted text versus
native structured tool calls. The same semantic call must come out as the
same ApiInvocation either way.
"""

from __future__ import annotations

import json
from typing import Any, Sequence

from ..env.invocation import looks_like_call, validate_invocation
from ..env.registry import ApiRegistry
from ..env.types import EnvError
from ..tree import (
    EventKind,
    TurnEvent,
    agent_message,
    env_error,
    tool_call,
    tool_result,
)
from .base import AgentTurnRequest, AgentTurnResponse, TokenUsage
from .client import ChatClient
from .prompts import agent_system_prompt


def _observation(payload: Any) -> str:
    return "OBSERVATION: " + json.dumps(payload, sort_keys=True)


def _error_observation(err: EnvError) -> str:
    return f"OBSERVATION: ERROR({err.category.value}): {err.detail}"


def _action_text(event: TurnEvent) -> str:
    assert event.call is not None
    return (
        f"ACTION: {event.call.api_name}\n"
        f"ACTION INPUT: {json.dumps(dict(event.call.arguments), sort_keys=True)}"
    )


def history_to_action_messages(history: Sequence[TurnEvent]) -> list[dict[str, Any]]:
    messages: list[dict[str, Any]] = []
    for e in history:
        if e.kind is EventKind.USER_MESSAGE:
            messages.append({"role": "user", "content": e.text})
        elif e.kind is EventKind.AGENT_MESSAGE:
            messages.append({"role": "assistant", "content": e.text})
        elif e.kind is EventKind.TOOL_CALL:
            messages.append({"role": "assistant", "content": _action_text(e)})
        elif e.kind is EventKind.TOOL_RESULT:
            messages.append({"role": "user", "content": _observation(e.result)})
        elif e.kind is EventKind.ENV_ERROR:
            assert e.error is not None
            messages.append({"role": "user", "content": _error_observation(e.error)})
    return messages


class ActionTextAgent:
    """Agent speaking the THOUGHT/ACTION/ACTION INPUT line grammar."""

    def __init__(self, client: ChatClient, registry: ApiRegistry, step_limit: int = 8):
        self.client = client
        self.registry = registry
        self.step_limit = step_limit
        self._system = agent_system_prompt(registry)

    def turn(self, request: AgentTurnRequest) -> AgentTurnResponse:
        messages = [{"role": "system", "content": self._system}]
        messages.extend(history_to_action_messages(request.history))
        events: list[TurnEvent] = []
        usage = TokenUsage()

        for _ in range(self.step_limit):
            response = self.client.complete(messages, request.sampling)
            usage = usage + response.usage
            text = response.choices[0].content or ""
            if not looks_like_call(text):
                events.append(agent_message(text))
                return AgentTurnResponse(events=events, usage=usage)

            messages.append({"role": "assistant", "content": text})
            validated = validate_invocation(text, self.registry)
            if isinstance(validated, EnvError):
                events.append(env_error(validated))
                messages.append({"role": "user", "content": _error_observation(validated)})
            else:
                payload = request.execute(validated)
                events.append(tool_call(validated))
                events.append(tool_result(payload))
                messages.append({"role": "user", "content": _observation(payload)})

        return AgentTurnResponse(events=events, truncated=True, usage=usage)


def history_to_tool_messages(history: Sequence[TurnEvent]) -> list[dict[str, Any]]:
    messages: list[dict[str, Any]] = []
    call_counter = 0
    pending_id: str | None = None
    for e in history:
        if e.kind is EventKind.USER_MESSAGE:
            messages.append({"role": "user", "content": e.text})
        elif e.kind is EventKind.AGENT_MESSAGE:
            messages.append({"role": "assistant", "content": e.text})
        elif e.kind is EventKind.TOOL_CALL:
            assert e.call is not None
            pending_id = f"call_{call_counter}"
            call_counter += 1
            messages.append(
                {
                    "role": "assistant",
                    "content": None,
                    "tool_calls": [
                        {
                            "id": pending_id,
                            "type": "function",
                            "function": {
                                "name": e.call.api_name,
                                "arguments": json.dumps(
                                    dict(e.call.arguments), sort_keys=True
                                ),
                            },
                        }
                    ],
                }
            )
        elif e.kind is EventKind.TOOL_RESULT:
            messages.append(
                {
                    "role": "tool",
                    "content": json.dumps(e.result, sort_keys=True),
                    "tool_call_id": pending_id or "call_unknown",
                }
            )
            pending_id = None
        elif e.kind is EventKind.ENV_ERROR:
            assert e.error is not None
            messages.append(
                {
                    "role": "tool",
                    "content": f"ERROR({e.error.category.value}): {e.error.detail}",
                    "tool_call_id": pending_id or "call_unknown",
                }
            )
            pending_id = None
    return messages


class FunctionCallingAgent:
    """Agent using native structured tool calls."""

    SYSTEM = (
        "You are a travel agent on the phone with a customer. Use the provided tools "
        "to search and book on their behalf. Only report reference numbers returned "
        "by a booking call; never make one up."
    )

    def __init__(self, client: ChatClient, registry: ApiRegistry, step_limit: int = 8):
        self.client = client
        self.registry = registry
        self.step_limit = step_limit
        self._tools = registry.to_tool_schemas()

    def turn(self, request: AgentTurnRequest) -> AgentTurnResponse:
        messages = [{"role": "system", "content": self.SYSTEM}]
        messages.extend(history_to_tool_messages(request.history))
        events: list[TurnEvent] = []
        usage = TokenUsage()

        for _ in range(self.step_limit):
            response = self.client.complete(messages, request.sampling, tools=self._tools)
            usage = usage + response.usage
            choice = response.choices[0]
            if not choice.tool_calls:
                events.append(agent_message(choice.content or ""))
                return AgentTurnResponse(events=events, usage=usage)

            messages.append(
                {
                    "role": "assistant",
                    "content": choice.content,
                    "tool_calls": [tc.to_dict() for tc in choice.tool_calls],
                }
            )
            for tc in choice.tool_calls:
                validated = validate_invocation(
                    {"name": tc.name, "arguments": tc.arguments}, self.registry
                )
                if isinstance(validated, EnvError):
                    events.append(env_error(validated))
                    content = f"ERROR({validated.category.value}): {validated.detail}"
                else:
                    payload = request.execute(validated)
                    events.append(tool_call(validated))
                    events.append(tool_result(payload))
                    content = json.dumps(payload, sort_keys=True)
                messages.append({"role": "tool", "content": content, "tool_call_id": tc.id})

        return AgentTurnResponse(events=events, truncated=True, usage=usage)
