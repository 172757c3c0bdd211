"""Parsing and validation of agent-emitted tool calls.

Two raw shapes are accepted: structured function-call objects (dicts with a
name and an argument map, or the chat-completions ``function`` nesting) and
the line-oriented action text format::

    THOUGHT: optional free-form reasoning
    ACTION: <api name>
    ACTION INPUT: <JSON object of arguments>

Every raw call maps to exactly one of: a valid ApiInvocation, BadApiUse
(unknown API or argument name), or IncorrectApiFormat (not parseable).
"""

from __future__ import annotations

import json
import re
from typing import Any, Mapping, Union

from .registry import ApiRegistry
from .types import ApiInvocation, EnvError, ErrorCategory, canonical_args

ACTION_RE = re.compile(r"^\s*ACTION\s*:\s*(.*?)\s*$", re.MULTILINE)
ACTION_INPUT_RE = re.compile(r"^\s*ACTION\s+INPUT\s*:\s*", re.MULTILINE)


def looks_like_call(text: str) -> bool:
    """Whether agent text is attempting the action format at all."""
    return bool(ACTION_RE.search(text)) or bool(ACTION_INPUT_RE.search(text))


def _format_error(detail: str) -> EnvError:
    return EnvError(category=ErrorCategory.INCORRECT_API_FORMAT, detail=detail)


def _bad_use(detail: str) -> EnvError:
    return EnvError(category=ErrorCategory.BAD_API_USE, detail=detail)


def _parse_action_text(text: str) -> tuple[str, dict[str, Any]] | EnvError:
    action = ACTION_RE.search(text)
    if action is None:
        return _format_error("missing ACTION line")
    name = action.group(1).strip()
    if not name:
        return _format_error("empty ACTION line")

    input_match = ACTION_INPUT_RE.search(text)
    if input_match is None:
        return _format_error("missing ACTION INPUT line")
    payload = text[input_match.end():].strip()
    if not payload:
        return _format_error("empty ACTION INPUT payload")
    try:
        args, _ = json.JSONDecoder().raw_decode(payload)
    except json.JSONDecodeError as e:
        return _format_error(f"ACTION INPUT is not valid JSON: {e.msg}")
    if not isinstance(args, dict):
        return _format_error("ACTION INPUT must be a JSON object")
    return name, args


def _parse_structured(raw: Mapping[str, Any]) -> tuple[str, dict[str, Any]] | EnvError:
    obj: Mapping[str, Any] = raw
    if "function" in obj and isinstance(obj["function"], Mapping):
        obj = obj["function"]
    name = obj.get("name")
    if not isinstance(name, str) or not name:
        return _format_error("structured call has no API name")
    args = obj.get("arguments", {})
    if isinstance(args, str):
        try:
            args = json.loads(args)
        except json.JSONDecodeError as e:
            return _format_error(f"arguments payload is not valid JSON: {e.msg}")
    if not isinstance(args, Mapping):
        return _format_error("arguments payload must be a JSON object")
    return name, dict(args)


def validate_invocation(
    raw: Union[str, Mapping[str, Any]], registry: ApiRegistry
) -> ApiInvocation | EnvError:
    """Canonicalize a raw agent call or classify why it is invalid."""
    if isinstance(raw, str):
        parsed = _parse_action_text(raw)
    elif isinstance(raw, Mapping):
        parsed = _parse_structured(raw)
    else:
        return _format_error(f"unsupported call payload of type {type(raw).__name__}")

    if isinstance(parsed, EnvError):
        return parsed
    name, args = parsed

    spec = registry.get(name)
    if spec is None:
        return _bad_use(f"unknown API {name!r}")
    unknown = sorted(set(str(k).strip() for k in args) - spec.parameter_names())
    if unknown:
        return _bad_use(f"unknown arguments for {name}: {', '.join(unknown)}")

    return ApiInvocation(api_name=name, arguments=canonical_args(args))
