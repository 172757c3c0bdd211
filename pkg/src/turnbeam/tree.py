"""Turn-level conversation trees with sparse-reward accounting.

A tree alternates user and agent turns. Pruning moves the root forward to
a reward-achieving turn; discarded subtrees stay in the node map so
extraction can mine them later. The reward ledger counts in exact
rationals so that "all goals achieved" is an exact predicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Iterator, Mapping

from .env.types import ApiInvocation, EnvError


class EventKind(str, Enum):
    USER_MESSAGE = "user_message"
    AGENT_MESSAGE = "agent_message"
    TOOL_CALL = "tool_call"
    TOOL_RESULT = "tool_result"
    ENV_ERROR = "env_error"


@dataclass(frozen=True)
class TurnEvent:
    kind: EventKind
    text: str | None = None  # user_message / agent_message
    call: ApiInvocation | None = None  # tool_call
    result: Any = None  # tool_result payload (JSON-able)
    error: EnvError | None = None  # env_error

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind.value}
        if self.text is not None:
            d["text"] = self.text
        if self.call is not None:
            d["call"] = self.call.to_dict()
        if self.result is not None:
            d["result"] = self.result
        if self.error is not None:
            d["error"] = self.error.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> TurnEvent:
        return cls(
            kind=EventKind(d["kind"]),
            text=d.get("text"),
            call=ApiInvocation.from_dict(d["call"]) if "call" in d else None,
            result=d.get("result"),
            error=EnvError.from_dict(d["error"]) if "error" in d else None,
        )


def user_message(text: str) -> TurnEvent:
    return TurnEvent(kind=EventKind.USER_MESSAGE, text=text)


def agent_message(text: str) -> TurnEvent:
    return TurnEvent(kind=EventKind.AGENT_MESSAGE, text=text)


def tool_call(call: ApiInvocation) -> TurnEvent:
    return TurnEvent(kind=EventKind.TOOL_CALL, call=call)


def tool_result(payload: Any) -> TurnEvent:
    return TurnEvent(kind=EventKind.TOOL_RESULT, result=payload)


def env_error(err: EnvError) -> TurnEvent:
    return TurnEvent(kind=EventKind.ENV_ERROR, error=err)


class NodeKind(str, Enum):
    USER = "user"
    AGENT = "agent"


@dataclass
class TurnNode:
    node_id: int
    parent: int | None
    kind: NodeKind
    events: list[TurnEvent] = field(default_factory=list)
    achieved_goal: int | None = None  # index into the scenario goal set
    partial_credit: bool = False
    on_ideal_path: bool = False
    ended: bool = False  # user hung up on this branch; leaf is frozen
    truncated: bool = False  # agent adapter hit its step limit

    def invocations(self) -> list[ApiInvocation]:
        return [e.call for e in self.events if e.kind is EventKind.TOOL_CALL and e.call]

    def to_dict(self) -> dict[str, Any]:
        return {
            "node_id": self.node_id,
            "parent": self.parent,
            "kind": self.kind.value,
            "events": [e.to_dict() for e in self.events],
            "achieved_goal": self.achieved_goal,
            "partial_credit": self.partial_credit,
            "on_ideal_path": self.on_ideal_path,
            "ended": self.ended,
            "truncated": self.truncated,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> TurnNode:
        return cls(
            node_id=d["node_id"],
            parent=d["parent"],
            kind=NodeKind(d["kind"]),
            events=[TurnEvent.from_dict(e) for e in d["events"]],
            achieved_goal=d.get("achieved_goal"),
            partial_credit=d.get("partial_credit", False),
            on_ideal_path=d.get("on_ideal_path", False),
            ended=d.get("ended", False),
            truncated=d.get("truncated", False),
        )


@dataclass
class RewardLedger:
    """Goal-set progress; average reward is achieved/initial, exactly."""

    goal_set_initial_size: int
    remaining: list[int]
    achieved_log: list[tuple[int, int]] = field(default_factory=list)  # (goal idx, node id)

    @classmethod
    def for_goal_count(cls, n: int) -> RewardLedger:
        if n <= 0:
            raise ValueError("goal set must be non-empty")
        return cls(goal_set_initial_size=n, remaining=list(range(n)))

    @property
    def average_reward(self) -> Fraction:
        return Fraction(len(self.achieved_log), self.goal_set_initial_size)

    def credit(self, goal_index: int, node_id: int) -> None:
        self.remaining.remove(goal_index)
        self.achieved_log.append((goal_index, node_id))

    def to_dict(self) -> dict[str, Any]:
        return {
            "goal_set_initial_size": self.goal_set_initial_size,
            "remaining": list(self.remaining),
            "achieved_log": [list(t) for t in self.achieved_log],
            "average_reward": str(self.average_reward),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> RewardLedger:
        return cls(
            goal_set_initial_size=d["goal_set_initial_size"],
            remaining=list(d["remaining"]),
            achieved_log=[(g, n) for g, n in d["achieved_log"]],
        )


class TerminationReason(str, Enum):
    ALL_GOALS_ACHIEVED = "AllGoalsAchieved"
    MAX_DEPTH = "MaxDepth"
    USER_ENDED = "UserEnded"
    FAULT = "Fault"


@dataclass
class RolloutTree:
    scenario_id: str
    nodes: dict[int, TurnNode]
    root: int  # current root after pruning
    original_root: int
    leaves: list[int]  # active frontier, creation order
    ledger: RewardLedger
    children: dict[int, list[int]] = field(default_factory=dict)
    terminated_reason: TerminationReason | None = None
    step_log: list[dict[str, Any]] = field(default_factory=list)
    usage: dict[str, int] = field(default_factory=lambda: {"prompt_tokens": 0, "completion_tokens": 0})
    _next_id: int = 0

    @classmethod
    def new(cls, scenario_id: str, goal_count: int) -> RolloutTree:
        root = TurnNode(node_id=0, parent=None, kind=NodeKind.AGENT)
        return cls(
            scenario_id=scenario_id,
            nodes={0: root},
            root=0,
            original_root=0,
            leaves=[0],
            ledger=RewardLedger.for_goal_count(goal_count),
            children={},
            _next_id=1,
        )

    def add_node(self, parent_id: int, kind: NodeKind, events: list[TurnEvent]) -> TurnNode:
        node = TurnNode(node_id=self._next_id, parent=parent_id, kind=kind, events=list(events))
        self._next_id += 1
        self.nodes[node.node_id] = node
        self.children.setdefault(parent_id, []).append(node.node_id)
        return node

    def node(self, node_id: int) -> TurnNode:
        return self.nodes[node_id]

    def children_of(self, node_id: int) -> list[int]:
        return list(self.children.get(node_id, []))

    def path_to(self, node_id: int) -> list[int]:
        """Node ids from the original root down to ``node_id``."""
        path: list[int] = []
        cur: int | None = node_id
        while cur is not None:
            path.append(cur)
            cur = self.nodes[cur].parent
        path.reverse()
        return path

    def is_descendant(self, node_id: int, ancestor_id: int) -> bool:
        cur: int | None = node_id
        while cur is not None:
            if cur == ancestor_id:
                return True
            cur = self.nodes[cur].parent
        return False

    def events_along_path(self, node_id: int) -> list[TurnEvent]:
        """All events from the original root to ``node_id``, flattened."""
        out: list[TurnEvent] = []
        for nid in self.path_to(node_id):
            out.extend(self.nodes[nid].events)
        return out

    def iter_nodes(self) -> Iterator[TurnNode]:
        return iter(self.nodes.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario_id": self.scenario_id,
            "nodes": [self.nodes[k].to_dict() for k in sorted(self.nodes)],
            "root": self.root,
            "original_root": self.original_root,
            "leaves": list(self.leaves),
            "ledger": self.ledger.to_dict(),
            "terminated_reason": (
                self.terminated_reason.value if self.terminated_reason else None
            ),
            "step_log": list(self.step_log),
            "usage": dict(self.usage),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> RolloutTree:
        nodes = {n["node_id"]: TurnNode.from_dict(n) for n in d["nodes"]}
        children: dict[int, list[int]] = {}
        for nid in sorted(nodes):
            parent = nodes[nid].parent
            if parent is not None:
                children.setdefault(parent, []).append(nid)
        return cls(
            scenario_id=d["scenario_id"],
            nodes=nodes,
            root=d["root"],
            original_root=d["original_root"],
            leaves=list(d["leaves"]),
            ledger=RewardLedger.from_dict(d["ledger"]),
            children=children,
            terminated_reason=(
                TerminationReason(d["terminated_reason"]) if d.get("terminated_reason") else None
            ),
            step_log=list(d.get("step_log", [])),
            usage=dict(d.get("usage", {"prompt_tokens": 0, "completion_tokens": 0})),
            _next_id=max(nodes) + 1 if nodes else 0,
        )
