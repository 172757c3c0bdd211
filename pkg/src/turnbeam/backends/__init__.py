"""Agent and user-simulator backends: live chat-completions adapters and
deterministic scripted stand-ins."""

from .base import (
    END_CONVERSATION,
    AgentBackend,
    AgentTurnRequest,
    AgentTurnResponse,
    BackendError,
    ProtocolError,
    SamplingParams,
    TokenUsage,
    TransportError,
    UserBackend,
    UserStepResponse,
)

__all__ = [
    "END_CONVERSATION",
    "AgentBackend",
    "AgentTurnRequest",
    "AgentTurnResponse",
    "BackendError",
    "ProtocolError",
    "SamplingParams",
    "TokenUsage",
    "TransportError",
    "UserBackend",
    "UserStepResponse",
]
