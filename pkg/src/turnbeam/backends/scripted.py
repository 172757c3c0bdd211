"""Deterministic scripted backends for tests and offline runs.

All scripted behavior is keyed off the request itself (history contents,
branch tag, seed), never off instance state, so instances are immutable
after construction and byte-reproducible regardless of call order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

from ..env.invocation import validate_invocation
from ..env.registry import ApiRegistry
from ..env.scenario import ScenarioEnv
from ..env.types import ApiInvocation, EnvError
from ..tree import EventKind, TurnEvent, agent_message, env_error, tool_call, tool_result
from .base import (
    END_CONVERSATION,
    AgentTurnRequest,
    AgentTurnResponse,
    UserStepResponse,
)


def attempt_call(
    raw: Any,
    registry: ApiRegistry,
    execute: Callable[[ApiInvocation], Any],
) -> list[TurnEvent]:
    """Validate and run one raw call, producing the turn events it yields."""
    validated = validate_invocation(raw, registry)
    if isinstance(validated, EnvError):
        return [env_error(validated)]
    return [tool_call(validated), tool_result(execute(validated))]


def _user_turns_taken(history: Sequence[TurnEvent]) -> int:
    return sum(1 for e in history if e.kind is EventKind.USER_MESSAGE)


def _calls_made(history: Sequence[TurnEvent]) -> int:
    return sum(1 for e in history if e.kind is EventKind.TOOL_CALL)


@dataclass(frozen=True)
class ScriptedUser:
    """Plays back fixed lines, then hangs up."""

    lines: tuple[str, ...] = ()

    def step(self, history: Sequence[TurnEvent], env: ScenarioEnv) -> UserStepResponse:
        idx = _user_turns_taken(history)
        if idx < len(self.lines):
            line = self.lines[idx]
            return UserStepResponse(utterance=line, ended=END_CONVERSATION in line)
        return UserStepResponse(utterance=END_CONVERSATION, ended=True)


@dataclass(frozen=True)
class GoalListUser:
    """Surfaces the scenario's user goals one per turn, then hangs up."""

    extra_turns: int = 2  # patience after the last goal

    def step(self, history: Sequence[TurnEvent], env: ScenarioEnv) -> UserStepResponse:
        idx = _user_turns_taken(history)
        goals = env.user_goals
        if idx < len(goals):
            return UserStepResponse(utterance=goals[idx], ended=False)
        if idx < len(goals) + self.extra_turns:
            return UserStepResponse(utterance="Anything else you need from me?", ended=False)
        return UserStepResponse(utterance=f"Thanks, goodbye {END_CONVERSATION}", ended=True)


class OracleAgent:
    """Emits the scenario's next goal call verbatim, one per turn."""

    def __init__(self, env: ScenarioEnv, registry: ApiRegistry):
        self.env = env
        self.registry = registry

    def turn(self, request: AgentTurnRequest) -> AgentTurnResponse:
        idx = _calls_made(request.history)
        if idx >= len(self.env.goal_set):
            return AgentTurnResponse(events=[agent_message("All done on my side.")])
        goal = self.env.goal_set[idx]
        raw = {"name": goal.api_name, "arguments": dict(goal.arguments)}
        events = attempt_call(raw, self.registry, request.execute)
        events.append(agent_message(f"I ran {goal.api_name} for you."))
        return AgentTurnResponse(events=events)


class ChattyAgent:
    """Never calls an API."""

    def turn(self, request: AgentTurnRequest) -> AgentTurnResponse:
        return AgentTurnResponse(events=[agent_message("Let me look into that for you.")])


class NthVariantOracleAgent:
    """Correct goal call only on sample index ``n``; other samples just chat."""

    def __init__(self, env: ScenarioEnv, registry: ApiRegistry, n: int = 1):
        self.env = env
        self.registry = registry
        self.n = n

    def turn(self, request: AgentTurnRequest) -> AgentTurnResponse:
        if request.branch_index != self.n:
            return AgentTurnResponse(events=[agent_message("Could you tell me more?")])
        idx = _calls_made(request.history)
        if idx >= len(self.env.goal_set):
            return AgentTurnResponse(events=[agent_message("All set.")])
        goal = self.env.goal_set[idx]
        raw = {"name": goal.api_name, "arguments": dict(goal.arguments)}
        events = attempt_call(raw, self.registry, request.execute)
        events.append(agent_message(f"Done: {goal.api_name}."))
        return AgentTurnResponse(events=events)


class NoisyAgent:
    """Seeded mix of correct, wrong, malformed, and chat-only turns.

    The per-turn RNG is derived from (seed, scenario, parent node, sample
    index), so behavior is independent of execution order.
    """

    def __init__(
        self,
        env: ScenarioEnv,
        registry: ApiRegistry,
        seed: int = 0,
        weights: Mapping[str, float] | None = None,
    ):
        self.env = env
        self.registry = registry
        self.seed = seed
        self.weights = dict(
            weights or {"correct": 0.35, "wrong": 0.25, "chat": 0.2, "bad_api": 0.1, "garbled": 0.1}
        )

    def _rng(self, request: AgentTurnRequest) -> random.Random:
        key = f"{self.seed}:{request.scenario_id}:{request.branch_parent}:{request.branch_index}"
        return random.Random(key)

    def turn(self, request: AgentTurnRequest) -> AgentTurnResponse:
        rng = self._rng(request)
        kinds = list(self.weights)
        choice = rng.choices(kinds, weights=[self.weights[k] for k in kinds])[0]
        idx = min(_calls_made(request.history), len(self.env.goal_set) - 1)
        goal = self.env.goal_set[idx]

        if choice == "correct":
            raw: Any = {"name": goal.api_name, "arguments": dict(goal.arguments)}
        elif choice == "wrong":
            args = dict(goal.arguments)
            if args:
                k = sorted(args)[0]
                args[k] = args[k] + "x"
            raw = {"name": goal.api_name, "arguments": args}
        elif choice == "bad_api":
            raw = {"name": "search_flight", "arguments": {"area": "north"}}
        elif choice == "garbled":
            raw = 'ACTION: search_hotel\nACTION INPUT: {"area": "north"'
        else:
            return AgentTurnResponse(events=[agent_message("Happy to help with that.")])

        events = attempt_call(raw, self.registry, request.execute)
        events.append(agent_message("Here is what I found."))
        return AgentTurnResponse(events=events)


@dataclass(frozen=True)
class NoisyUser:
    """Goal-list user that sometimes hangs up early, seeded per branch."""

    seed: int = 0
    hangup_prob: float = 0.05

    def step(self, history: Sequence[TurnEvent], env: ScenarioEnv) -> UserStepResponse:
        idx = _user_turns_taken(history)
        rng = random.Random(f"{self.seed}:{env.scenario_id}:{idx}:{len(history)}")
        if rng.random() < self.hangup_prob:
            return UserStepResponse(utterance=f"Never mind. {END_CONVERSATION}", ended=True)
        goals = env.user_goals
        if idx < len(goals):
            return UserStepResponse(utterance=goals[idx], ended=False)
        return UserStepResponse(utterance="Is it booked yet?", ended=False)
