"""Mining finished rollout trees for training data.

Backtracking from the final reward-achieving turn to the original root
gives the ideal path. The full path transcript becomes one supervised
fine-tuning record; at each user turn along the path, the on-path agent
turn is an upvote and its non-partial-credit siblings are downvotes
(unpaired preference records). Turns hanging off user turns that are not
on the ideal path contribute nothing.

Message item schema (shared by both record kinds):
    {"role": "system"|"user"|"assistant"|"tool", "content": str|null}
    assistant tool calls add   "tool_call": {"name": ..., "arguments": {...}}
    tool errors add            "error": "<category>"
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from .tree import EventKind, NodeKind, RolloutTree, TurnEvent

DEFAULT_SYSTEM_PROMPT = "You are a travel agent assisting a customer over the phone."


def events_to_messages(events: Sequence[TurnEvent]) -> list[dict[str, Any]]:
    messages: list[dict[str, Any]] = []
    for e in events:
        if e.kind is EventKind.USER_MESSAGE:
            messages.append({"role": "user", "content": e.text})
        elif e.kind is EventKind.AGENT_MESSAGE:
            messages.append({"role": "assistant", "content": e.text})
        elif e.kind is EventKind.TOOL_CALL:
            assert e.call is not None
            messages.append(
                {
                    "role": "assistant",
                    "content": None,
                    "tool_call": {"name": e.call.api_name, "arguments": dict(e.call.arguments)},
                }
            )
        elif e.kind is EventKind.TOOL_RESULT:
            messages.append({"role": "tool", "content": json.dumps(e.result, sort_keys=True)})
        elif e.kind is EventKind.ENV_ERROR:
            assert e.error is not None
            messages.append(
                {
                    "role": "tool",
                    "content": f"ERROR({e.error.category.value}): {e.error.detail}",
                    "error": e.error.category.value,
                }
            )
    return messages


@dataclass(frozen=True)
class SftRecord:
    scenario_id: str
    messages: tuple[dict[str, Any], ...]

    def to_dict(self) -> dict[str, Any]:
        return {"scenario_id": self.scenario_id, "messages": list(self.messages)}


@dataclass(frozen=True)
class KtoRecord:
    scenario_id: str
    context: tuple[dict[str, Any], ...]  # through the shared user turn
    completion: tuple[dict[str, Any], ...]  # the agent turn's own events
    label: bool  # True = upvote

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario_id": self.scenario_id,
            "messages": list(self.context),
            "completion": list(self.completion),
            "label": self.label,
        }


def ideal_path(tree: RolloutTree) -> list[int]:
    """Original root to the final reward-achieving node; [] if no rewards."""
    if not tree.ledger.achieved_log:
        return []
    return tree.path_to(tree.ledger.achieved_log[-1][1])


def extract_sft(
    tree: RolloutTree, system_prompt: str = DEFAULT_SYSTEM_PROMPT
) -> SftRecord | None:
    """Linearize the ideal path into one transcript; None when no rewards."""
    path = ideal_path(tree)
    if not path:
        return None
    messages = [{"role": "system", "content": system_prompt}]
    for nid in path:
        messages.extend(events_to_messages(tree.nodes[nid].events))
    return SftRecord(scenario_id=tree.scenario_id, messages=tuple(messages))


def extract_kto(
    tree: RolloutTree, system_prompt: str = DEFAULT_SYSTEM_PROMPT
) -> list[KtoRecord]:
    """Upvote/downvote records for every user turn along the ideal path."""
    path = ideal_path(tree)
    if not path:
        return []
    on_path = set(path)
    records: list[KtoRecord] = []

    context: list[dict[str, Any]] = [{"role": "system", "content": system_prompt}]
    for nid in path:
        node = tree.nodes[nid]
        context.extend(events_to_messages(node.events))
        if node.kind is not NodeKind.USER:
            continue
        frozen_context = tuple(context)
        upvotes: list[KtoRecord] = []
        downvotes: list[KtoRecord] = []
        for child_id in tree.children_of(nid):
            child = tree.nodes[child_id]
            if child.kind is not NodeKind.AGENT:
                continue
            completion = tuple(events_to_messages(child.events))
            if child_id in on_path:
                upvotes.append(
                    KtoRecord(tree.scenario_id, frozen_context, completion, label=True)
                )
            elif child.partial_credit:
                continue  # achieved a reward off-path: neither label
            else:
                downvotes.append(
                    KtoRecord(tree.scenario_id, frozen_context, completion, label=False)
                )
        records.extend(upvotes)
        records.extend(downvotes)
    return records


def path_has_errors(tree: RolloutTree) -> bool:
    return any(
        e.kind is EventKind.ENV_ERROR
        for nid in ideal_path(tree)
        for e in tree.nodes[nid].events
    )


def filter_rollouts(trees: Iterable[RolloutTree]) -> list[RolloutTree]:
    """Keep trees that achieved every goal with an error-free ideal path.

    The reward comparison is exact rational arithmetic, so three thirds is
    one, not 0.9999....
    """
    return [
        t for t in trees if t.ledger.average_reward == 1 and not path_has_errors(t)
    ]


def sft_records_to_jsonl(records: Iterable[SftRecord]) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records)


def kto_records_to_jsonl(records: Iterable[KtoRecord]) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records)
