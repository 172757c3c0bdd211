"""Agent and user-simulator backend contracts.

Backends are shareable across concurrent branches: requests carry
everything turn-specific (history, a tool executor bound to the scenario,
and a branch tag for deterministic seeding in scripted backends).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Protocol, Sequence

from ..env.registry import ApiRegistry
from ..env.scenario import ScenarioEnv
from ..env.types import ApiInvocation
from ..tree import TurnEvent

END_CONVERSATION = "END_CONVERSATION"


class BackendError(Exception):
    """Base for backend failures."""


class TransportError(BackendError):
    """HTTP/status failure that survived the retry policy."""


class ProtocolError(BackendError):
    """The provider answered, but the payload is not a usable response."""


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 1.0
    top_k: int | None = None
    top_p: float | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.top_p is not None and not (0 < self.top_p <= 1):
            raise ValueError("top_p must be in (0, 1]")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"temperature": self.temperature}
        if self.top_k is not None:
            d["top_k"] = self.top_k
        if self.top_p is not None:
            d["top_p"] = self.top_p
        if self.seed is not None:
            d["seed"] = self.seed
        return d


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def __add__(self, other: TokenUsage) -> TokenUsage:
        return TokenUsage(
            prompt_tokens=self.prompt_tokens + other.prompt_tokens,
            completion_tokens=self.completion_tokens + other.completion_tokens,
        )


@dataclass(frozen=True)
class AgentTurnRequest:
    history: Sequence[TurnEvent]
    registry: ApiRegistry | None
    sampling: SamplingParams
    execute: Callable[[ApiInvocation], Any]  # scenario-bound tool executor
    scenario_id: str = ""
    branch_parent: int = 0  # node the sampled turn will attach to
    branch_index: int = 0  # which of the branching_factor samples this is


@dataclass
class AgentTurnResponse:
    """One full agent turn: tool activity followed by at most one message."""

    events: list[TurnEvent] = field(default_factory=list)
    truncated: bool = False
    usage: TokenUsage = TokenUsage()


@dataclass(frozen=True)
class UserStepResponse:
    utterance: str
    ended: bool  # END_CONVERSATION sentinel detected
    usage: TokenUsage = TokenUsage()


class AgentBackend(Protocol):
    def turn(self, request: AgentTurnRequest) -> AgentTurnResponse: ...


class UserBackend(Protocol):
    def step(self, history: Sequence[TurnEvent], env: ScenarioEnv) -> UserStepResponse: ...
