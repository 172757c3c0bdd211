"""Core value types for the tool-calling environment.

All argument and database values are canonicalized to lowercased,
whitespace-trimmed strings so that subset and equality checks use a single
convention everywhere (goal matching, serving, cleaning).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping


class ErrorCategory(str, Enum):
    """The two ways an agent call can be invalid."""

    BAD_API_USE = "BadApiUse"  # well-formed call, unknown API or argument name
    INCORRECT_API_FORMAT = "IncorrectApiFormat"  # call text not parseable


@dataclass(frozen=True)
class EnvError:
    category: ErrorCategory
    detail: str

    def to_dict(self) -> dict[str, str]:
        return {"category": self.category.value, "detail": self.detail}

    @classmethod
    def from_dict(cls, d: Mapping[str, str]) -> EnvError:
        return cls(category=ErrorCategory(d["category"]), detail=d["detail"])


def canonical_value(value: Any) -> str:
    """Lowercased, trimmed string form of a slot value."""
    return str(value).strip().lower()


def canonical_args(args: Mapping[str, Any]) -> dict[str, str]:
    """Canonicalize every value of an argument map; keys are trimmed only.

    Keys keep their case: parameter names such as ``leaveAt`` and ``trainID``
    are case-sensitive identifiers.
    """
    return {str(k).strip(): canonical_value(v) for k, v in args.items()}


def mapping_subset(small: Mapping[str, str], big: Mapping[str, str]) -> bool:
    """True iff every key/value pair of ``small`` appears in ``big``."""
    return all(big.get(k) == v for k, v in small.items())


@dataclass(frozen=True)
class GoalApiCall:
    """A target tool invocation; completing it grants the sparse reward.

    ``arguments`` holds the canonical argument map the agent must cover.
    Book goals additionally carry the booked entity's unique id and the
    values (reference number etc.) served back on a successful booking.
    """

    api_name: str
    arguments: Mapping[str, str]
    unique_id: str | None = None
    return_values: Mapping[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"api_name": self.api_name, "arguments": dict(self.arguments)}
        if self.unique_id is not None:
            d["unique_id"] = self.unique_id
        if self.return_values:
            d["return_values"] = dict(self.return_values)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> GoalApiCall:
        return cls(
            api_name=d["api_name"],
            arguments=dict(d["arguments"]),
            unique_id=d.get("unique_id"),
            return_values=dict(d.get("return_values", {})),
        )


@dataclass(frozen=True)
class ApiInvocation:
    """A validated agent tool call: known API, known argument names only."""

    api_name: str
    arguments: Mapping[str, str]

    def to_dict(self) -> dict[str, Any]:
        return {"api_name": self.api_name, "arguments": dict(self.arguments)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ApiInvocation:
        return cls(api_name=d["api_name"], arguments=dict(d["arguments"]))


@dataclass(frozen=True)
class BookingResult:
    """Outcome of a booking call; mismatches are failures, never faults."""

    success: bool
    return_values: Mapping[str, str] | None = None

    def to_payload(self) -> dict[str, Any]:
        return {
            "success": self.success,
            "return": dict(self.return_values) if self.return_values is not None else None,
        }
