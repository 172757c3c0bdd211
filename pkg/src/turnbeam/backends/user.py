"""LLM-backed user simulators.

The goal-based simulator follows the scenario's user goals in order with
no knowledge of the original conversation. The guide simulator is coached:
a first model call reads the source transcript and suggests advice plus a
quote; a second call speaks the actual customer message. Both hang up by
saying END_CONVERSATION.
"""

from __future__ import annotations

import re
from typing import Any, Sequence

from ..env.scenario import ScenarioEnv
from ..tree import EventKind, TurnEvent
from .base import END_CONVERSATION, SamplingParams, UserStepResponse
from .client import ChatClient
from .prompts import (
    GOAL_USER_REMINDER,
    GOAL_USER_SYSTEM,
    GUIDE_COACH_PROMPT,
    GUIDE_SPEAKER_REMINDER,
    render_goals,
    render_transcript,
)


def flip_history(history: Sequence[TurnEvent]) -> list[dict[str, Any]]:
    """The conversation as the customer sees it: agent text is 'user' input
    to the simulator, the simulator's own lines are 'assistant'. Tool
    traffic is invisible."""
    messages: list[dict[str, Any]] = []
    for e in history:
        if e.kind is EventKind.USER_MESSAGE:
            messages.append({"role": "assistant", "content": e.text})
        elif e.kind is EventKind.AGENT_MESSAGE:
            messages.append({"role": "user", "content": e.text})
    return messages


def visible_history_text(history: Sequence[TurnEvent]) -> str:
    lines = []
    for e in history:
        if e.kind is EventKind.USER_MESSAGE:
            lines.append(f"CUSTOMER: {e.text}")
        elif e.kind is EventKind.AGENT_MESSAGE:
            lines.append(f"AGENT: {e.text}")
    return "\n".join(lines)


class GoalUserSimulator:
    def __init__(self, client: ChatClient, sampling: SamplingParams | None = None):
        self.client = client
        self.sampling = sampling or SamplingParams(temperature=1.0)

    def step(self, history: Sequence[TurnEvent], env: ScenarioEnv) -> UserStepResponse:
        messages = [
            {
                "role": "system",
                "content": GOAL_USER_SYSTEM.format(goals=render_goals(env.user_goals)),
            }
        ]
        messages.extend(flip_history(history))
        messages.append({"role": "user", "content": GOAL_USER_REMINDER})
        response = self.client.complete(messages, self.sampling)
        text = response.choices[0].content or ""
        return UserStepResponse(
            utterance=text, ended=END_CONVERSATION in text, usage=response.usage
        )


_QUOTE_RE = re.compile(r"Suggested quote:\s*\n?(.*)", re.DOTALL | re.IGNORECASE)


def parse_coach_output(text: str) -> tuple[str, str | None, bool]:
    """Split coach output into (advice text, suggested quote, end flag)."""
    quote: str | None = None
    m = _QUOTE_RE.search(text)
    if m:
        quote = m.group(1).strip().strip('"').strip()
    return text, quote, END_CONVERSATION in text


class GuideUserSimulator:
    """Two-stage simulator: coach suggests, speaker says."""

    def __init__(
        self,
        client: ChatClient,
        sampling: SamplingParams | None = None,
        coach_sampling: SamplingParams | None = None,
    ):
        self.client = client
        self.sampling = sampling or SamplingParams(temperature=1.0)
        self.coach_sampling = coach_sampling or SamplingParams(temperature=0.0)

    def step(self, history: Sequence[TurnEvent], env: ScenarioEnv) -> UserStepResponse:
        if not env.source_transcript:
            raise ValueError(
                f"scenario {env.scenario_id}: guide simulator requires a source transcript"
            )
        coach_prompt = GUIDE_COACH_PROMPT.format(
            goals=render_goals(env.user_goals),
            goal_convo=render_transcript(env.source_transcript),
            current_convo=visible_history_text(history) or "(conversation just started)",
        )
        coach_response = self.client.complete(
            [{"role": "user", "content": coach_prompt}], self.coach_sampling
        )
        advice_text, quote, coach_ended = parse_coach_output(
            coach_response.choices[0].content or ""
        )
        usage = coach_response.usage
        if coach_ended:
            utterance = quote if quote else advice_text
            if END_CONVERSATION not in utterance:
                utterance = f"{utterance} {END_CONVERSATION}"
            return UserStepResponse(utterance=utterance, ended=True, usage=usage)

        messages = [
            {
                "role": "system",
                "content": GOAL_USER_SYSTEM.format(goals=render_goals(env.user_goals)),
            }
        ]
        messages.extend(flip_history(history))
        messages.append(
            {"role": "user", "content": GUIDE_SPEAKER_REMINDER.format(advice=advice_text)}
        )
        response = self.client.complete(messages, self.sampling)
        usage = usage + response.usage
        text = response.choices[0].content or ""
        return UserStepResponse(
            utterance=text, ended=END_CONVERSATION in text, usage=usage
        )
