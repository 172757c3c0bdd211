"""Turn-level beam-search rollout engine.

Each iteration: every active leaf receives one user turn; leaves then fan
out into agent-turn samples (branching_factor per leaf while the frontier
fits under max_beam, otherwise one each); finally the reward scan promotes
the first leaf that completed a remaining goal to be the new root, pruning
every other branch. A turn that completed several goals keeps earning on
subsequent scans of the same step — one goal per prune event.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .backends.base import (
    AgentBackend,
    AgentTurnRequest,
    BackendError,
    SamplingParams,
    UserBackend,
)
from .env.matching import match_goal
from .env.scenario import ScenarioEnv
from .tree import (
    NodeKind,
    RolloutTree,
    TerminationReason,
    TurnNode,
    user_message,
)


@dataclass(frozen=True)
class BeamConfig:
    branching_factor: int = 2
    max_beam: int = 8
    max_depth: int = 10  # user+agent exchanges
    agent_sampling: SamplingParams = field(default_factory=SamplingParams)

    def __post_init__(self) -> None:
        if self.branching_factor < 1:
            raise ValueError("branching_factor must be >= 1")
        if self.max_beam < 1:
            raise ValueError("max_beam must be >= 1")
        if self.branching_factor > self.max_beam:
            raise ValueError("branching_factor must not exceed max_beam")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")

    def to_dict(self) -> dict:
        return {
            "branching_factor": self.branching_factor,
            "max_beam": self.max_beam,
            "max_depth": self.max_depth,
            "agent_sampling": self.agent_sampling.to_dict(),
        }


def expand_leaves(tree: RolloutTree, cfg: BeamConfig) -> dict[int, int]:
    """Samples to request per expandable leaf.

    branching_factor per leaf while the whole frontier times the factor
    fits in max_beam; otherwise exactly one sample per leaf. Frozen
    (hung-up) leaves get none.
    """
    per_leaf = (
        cfg.branching_factor
        if len(tree.leaves) * cfg.branching_factor <= cfg.max_beam
        else 1
    )
    return {
        leaf_id: per_leaf for leaf_id in tree.leaves if not tree.nodes[leaf_id].ended
    }


def _achieved_goals(node: TurnNode, remaining: list[int], env: ScenarioEnv) -> list[int]:
    """Remaining goal indices this node's own invocations complete, in goal order."""
    invocations = node.invocations()
    if not invocations:
        return []
    return [
        gi
        for gi in remaining
        if any(match_goal(env.goal_set[gi], inv, env) for inv in invocations)
    ]


def check_rewards_and_prune(tree: RolloutTree, env: ScenarioEnv) -> bool:
    """One reward scan: at most one prune event. Returns True if it pruned.

    Leaves are scanned in creation order. The first leaf completing any
    remaining goal becomes the new root and the sole leaf; the goal first
    in goal-set order is credited. Other leaves that also completed a
    remaining goal are marked partial credit before being discarded.
    """
    achieved = {
        leaf_id: hits
        for leaf_id in tree.leaves
        if (hits := _achieved_goals(tree.nodes[leaf_id], tree.ledger.remaining, env))
    }
    if not achieved:
        return False

    winner_id, winner_hits = next(iter(achieved.items()))
    goal_index = winner_hits[0]
    winner = tree.nodes[winner_id]
    if winner.achieved_goal is None:
        winner.achieved_goal = goal_index
    tree.ledger.credit(goal_index, winner_id)

    for leaf_id, hits in achieved.items():
        if leaf_id == winner_id:
            continue
        other = tree.nodes[leaf_id]
        other.partial_credit = True
        if other.achieved_goal is None:
            other.achieved_goal = hits[0]

    tree.root = winner_id
    tree.leaves = [winner_id]
    return True


def mark_ideal_path(tree: RolloutTree) -> list[int]:
    """Flag the original-root-to-final-reward chain; returns it in order."""
    if not tree.ledger.achieved_log:
        return []
    final_node = tree.ledger.achieved_log[-1][1]
    path = tree.path_to(final_node)
    for nid in path:
        tree.nodes[nid].on_ideal_path = True
    return path


def run_rollout(
    env: ScenarioEnv,
    agent: AgentBackend,
    user: UserBackend,
    cfg: BeamConfig,
) -> RolloutTree:
    """Run the beam-search simulation loop until goals are done or budget ends.

    Backend faults kill only their branch; the rollout faults when no
    branch survives. The returned tree always carries a termination reason
    and the ideal path flags.
    """
    tree = RolloutTree.new(env.scenario_id, goal_count=len(env.goal_set))
    depth = 0
    while depth < cfg.max_depth and tree.ledger.remaining:
        depth += 1
        step: dict = {"depth": depth}

        # User turn on every active leaf; hang-ups freeze their branch.
        new_frontier: list[int] = []
        for leaf_id in tree.leaves:
            leaf = tree.nodes[leaf_id]
            if leaf.ended:
                new_frontier.append(leaf_id)
                continue
            try:
                resp = user.step(tree.events_along_path(leaf_id), env)
            except BackendError:
                continue  # branch dropped
            _add_usage(tree, resp.usage)
            node = tree.add_node(leaf_id, NodeKind.USER, [user_message(resp.utterance)])
            node.ended = resp.ended
            new_frontier.append(node.node_id)
        tree.leaves = new_frontier
        step["leaves_after_user"] = len(tree.leaves)
        step["frozen_leaves"] = sum(1 for l in tree.leaves if tree.nodes[l].ended)

        if not tree.leaves:
            tree.terminated_reason = TerminationReason.FAULT
            tree.step_log.append(step)
            break
        if all(tree.nodes[l].ended for l in tree.leaves):
            tree.terminated_reason = TerminationReason.USER_ENDED
            tree.step_log.append(step)
            break

        # Expansion: agent-turn samples per leaf.
        plan = expand_leaves(tree, cfg)
        step["samples_per_leaf"] = max(plan.values())
        new_frontier = []
        for leaf_id in tree.leaves:
            if leaf_id not in plan:  # frozen leaf rides along
                new_frontier.append(leaf_id)
                continue
            for k in range(plan[leaf_id]):
                request = AgentTurnRequest(
                    history=tree.events_along_path(leaf_id),
                    registry=_registry_of(agent),
                    sampling=cfg.agent_sampling,
                    execute=env.execute_call,
                    scenario_id=env.scenario_id,
                    branch_parent=leaf_id,
                    branch_index=k,
                )
                try:
                    resp = agent.turn(request)
                except BackendError:
                    continue  # sample dropped
                _add_usage(tree, resp.usage)
                node = tree.add_node(leaf_id, NodeKind.AGENT, resp.events)
                node.truncated = resp.truncated
                new_frontier.append(node.node_id)
        tree.leaves = new_frontier
        step["leaves_after_agent"] = len(tree.leaves)

        if not tree.leaves:
            tree.terminated_reason = TerminationReason.FAULT
            tree.step_log.append(step)
            break

        prunes = 0
        while check_rewards_and_prune(tree, env):
            prunes += 1
            if not tree.ledger.remaining:
                break
        step["prune_events"] = prunes
        tree.step_log.append(step)

    if tree.terminated_reason is None:
        if not tree.ledger.remaining:
            tree.terminated_reason = TerminationReason.ALL_GOALS_ACHIEVED
        else:
            tree.terminated_reason = TerminationReason.MAX_DEPTH
    mark_ideal_path(tree)
    return tree


def _registry_of(agent: AgentBackend):
    # Adapters carry their registry; scripted backends may not need one.
    return getattr(agent, "registry", None)


def _add_usage(tree: RolloutTree, usage) -> None:
    tree.usage["prompt_tokens"] += usage.prompt_tokens
    tree.usage["completion_tokens"] += usage.completion_tokens


def average_reward(tree: RolloutTree) -> Fraction:
    """Fraction of the initial goal set achieved, as an exact rational."""
    return tree.ledger.average_reward
