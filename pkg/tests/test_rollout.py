"""Beam mechanics, reward accounting, pruning, determinism."""

from __future__ import annotations

from fractions import Fraction

import pytest

from turnbeam.backends.base import (
    AgentTurnRequest,
    AgentTurnResponse,
    TransportError,
    UserStepResponse,
)
from turnbeam.backends.scripted import (
    ChattyAgent,
    GoalListUser,
    NoisyAgent,
    NoisyUser,
    NthVariantOracleAgent,
    OracleAgent,
    ScriptedUser,
    attempt_call,
)
from turnbeam.env import load_scenario
from turnbeam.rollout import (
    BeamConfig,
    average_reward,
    check_rewards_and_prune,
    expand_leaves,
    run_rollout,
)
from turnbeam.tree import NodeKind, RolloutTree, TerminationReason, agent_message

from conftest import make_scenario_record

USER_LINES = (
    "I want an indian restaurant.",
    "Book it for 3 people at 13:00 on tuesday.",
    "Thanks, anything else you need?",
    "Still there?",
    "Hello?",
    "Any update?",
    "Please go on.",
    "Okay.",
    "Fine.",
    "Waiting.",
)


@pytest.fixture
def env(registry):
    return load_scenario(make_scenario_record(), registry)


def test_oracle_agent_single_path(env, registry):
    cfg = BeamConfig(branching_factor=2, max_beam=8, max_depth=10)
    tree = run_rollout(env, OracleAgent(env, registry), ScriptedUser(USER_LINES), cfg)
    assert tree.terminated_reason is TerminationReason.ALL_GOALS_ACHIEVED
    assert average_reward(tree) == 1
    # Both samples of each turn achieve, so the loser is partial credit and
    # the surviving tree is a single path.
    path = tree.path_to(tree.ledger.achieved_log[-1][1])
    assert [tree.nodes[n].kind for n in path] == [
        NodeKind.AGENT,  # synthetic root
        NodeKind.USER,
        NodeKind.AGENT,
        NodeKind.USER,
        NodeKind.AGENT,
    ]


def test_never_calling_agent_hits_depth_limit(env):
    cfg = BeamConfig(branching_factor=2, max_beam=8, max_depth=5)
    tree = run_rollout(env, ChattyAgent(), ScriptedUser(USER_LINES), cfg)
    assert tree.terminated_reason is TerminationReason.MAX_DEPTH
    assert average_reward(tree) == 0
    assert len(tree.step_log) == 5


def test_second_variant_tree_matches_hand_enumeration(env, registry):
    # bf=2, two goals, reward only on sample index 1: the full tree is
    # seven nodes, hand-derived.
    cfg = BeamConfig(branching_factor=2, max_beam=8, max_depth=10)
    agent = NthVariantOracleAgent(env, registry, n=1)
    tree = run_rollout(env, agent, ScriptedUser(USER_LINES), cfg)

    assert tree.terminated_reason is TerminationReason.ALL_GOALS_ACHIEVED
    assert average_reward(tree) == 1
    assert [s["prune_events"] for s in tree.step_log] == [1, 1]

    expected = {
        # node_id: (parent, kind, achieved_goal, partial, on_ideal_path)
        0: (None, NodeKind.AGENT, None, False, True),
        1: (0, NodeKind.USER, None, False, True),
        2: (1, NodeKind.AGENT, None, False, False),  # chat-only sample 0
        3: (1, NodeKind.AGENT, 0, False, True),  # goal 0 on sample 1
        4: (3, NodeKind.USER, None, False, True),
        5: (4, NodeKind.AGENT, None, False, False),
        6: (4, NodeKind.AGENT, 1, False, True),
    }
    assert set(tree.nodes) == set(expected)
    for nid, (parent, kind, goal, partial, ideal) in expected.items():
        node = tree.nodes[nid]
        assert node.parent == parent
        assert node.kind is kind
        assert node.achieved_goal == goal
        assert node.partial_credit is partial
        assert node.on_ideal_path is ideal
    assert tree.root == 6
    assert tree.leaves == [6]
    assert tree.ledger.achieved_log == [(0, 3), (1, 6)]


def test_simultaneous_achievers_mark_partial_credit(env, registry):
    # OracleAgent achieves on every sample; the first created leaf wins,
    # the sibling is partial credit and excluded from the ideal path.
    cfg = BeamConfig(branching_factor=2, max_beam=8, max_depth=10)
    tree = run_rollout(env, OracleAgent(env, registry), ScriptedUser(USER_LINES), cfg)
    level_one = tree.children_of(1)
    assert len(level_one) == 2
    winner, sibling = level_one
    assert tree.nodes[winner].achieved_goal == 0
    assert tree.nodes[winner].partial_credit is False
    assert tree.nodes[sibling].partial_credit is True
    assert tree.nodes[sibling].achieved_goal == 0
    assert tree.nodes[sibling].on_ideal_path is False


def test_leaf_count_trajectory_follows_beam_cap(env):
    cfg = BeamConfig(branching_factor=2, max_beam=8, max_depth=6)
    tree = run_rollout(env, ChattyAgent(), ScriptedUser(USER_LINES), cfg)
    assert [s["leaves_after_user"] for s in tree.step_log] == [1, 2, 4, 8, 8, 8]
    assert [s["leaves_after_agent"] for s in tree.step_log] == [2, 4, 8, 8, 8, 8]
    assert [s["samples_per_leaf"] for s in tree.step_log] == [2, 2, 2, 1, 1, 1]


def test_expansion_plan_rules(env):
    tree = RolloutTree.new("X", goal_count=1)
    user = tree.add_node(0, NodeKind.USER, [])
    leaves = [tree.add_node(user.node_id, NodeKind.AGENT, []).node_id for _ in range(4)]
    tree.leaves = list(leaves)
    cfg = BeamConfig(branching_factor=2, max_beam=8)
    assert expand_leaves(tree, cfg) == {l: 2 for l in leaves}

    more = [tree.add_node(user.node_id, NodeKind.AGENT, []).node_id for _ in range(4)]
    tree.leaves = leaves + more
    assert expand_leaves(tree, cfg) == {l: 1 for l in leaves + more}


def test_user_hangup_freezes_all_branches(env, registry):
    user = ScriptedUser(("I want an indian restaurant END_CONVERSATION",))
    cfg = BeamConfig(branching_factor=2, max_beam=8, max_depth=5)
    tree = run_rollout(env, ChattyAgent(), user, cfg)
    assert tree.terminated_reason is TerminationReason.USER_ENDED
    # The hang-up user turn exists but received no agent children.
    frozen = [n for n in tree.iter_nodes() if n.ended]
    assert frozen and all(not tree.children_of(n.node_id) for n in frozen)


class FaultyAgent:
    def turn(self, request: AgentTurnRequest) -> AgentTurnResponse:
        raise TransportError("backend unreachable")


class FlakyBranchAgent:
    """Faults only on the second sample; first branch survives."""

    def __init__(self, env, registry):
        self.inner = OracleAgent(env, registry)

    def turn(self, request: AgentTurnRequest) -> AgentTurnResponse:
        if request.branch_index == 1:
            raise TransportError("flaky")
        return self.inner.turn(request)


def test_total_agent_fault_terminates_rollout(env):
    cfg = BeamConfig(branching_factor=2, max_beam=8, max_depth=5)
    tree = run_rollout(env, FaultyAgent(), ScriptedUser(USER_LINES), cfg)
    assert tree.terminated_reason is TerminationReason.FAULT


def test_branch_fault_only_kills_its_branch(env, registry):
    cfg = BeamConfig(branching_factor=2, max_beam=8, max_depth=10)
    tree = run_rollout(env, FlakyBranchAgent(env, registry), ScriptedUser(USER_LINES), cfg)
    assert tree.terminated_reason is TerminationReason.ALL_GOALS_ACHIEVED
    assert average_reward(tree) == 1


class TwoCallAgent:
    """Completes both goals inside one agent turn."""

    def __init__(self, env, registry):
        self.env = env
        self.registry = registry

    def turn(self, request: AgentTurnRequest) -> AgentTurnResponse:
        events = []
        for goal in self.env.goal_set:
            raw = {"name": goal.api_name, "arguments": dict(goal.arguments)}
            events.extend(attempt_call(raw, self.registry, request.execute))
        events.append(agent_message("Both done."))
        return AgentTurnResponse(events=events)


def test_turn_completing_two_goals_earns_both_over_repeated_scans(env, registry):
    cfg = BeamConfig(branching_factor=2, max_beam=8, max_depth=10)
    tree = run_rollout(env, TwoCallAgent(env, registry), ScriptedUser(USER_LINES), cfg)
    assert tree.terminated_reason is TerminationReason.ALL_GOALS_ACHIEVED
    assert average_reward(tree) == 1
    assert len(tree.step_log) == 1
    assert tree.step_log[0]["prune_events"] == 2
    # Both credits point at the same node.
    assert len({node for _, node in tree.ledger.achieved_log}) == 1


def test_no_achiever_leaves_tree_unchanged(env):
    tree = RolloutTree.new(env.scenario_id, goal_count=2)
    user = tree.add_node(0, NodeKind.USER, [])
    a = tree.add_node(user.node_id, NodeKind.AGENT, [agent_message("hi")])
    tree.leaves = [a.node_id]
    before = tree.to_dict()
    assert check_rewards_and_prune(tree, env) is False
    assert tree.to_dict() == before


FUZZ_SEEDS = range(200)


@pytest.mark.parametrize("seed", FUZZ_SEEDS)
def test_fuzzed_rollouts_respect_beam_and_ledger(seed, registry):
    record = make_scenario_record(
        goals={
            "restaurant": {
                "search": {"parameters": {"food": "indian"}},
                "book": {
                    "parameters": {"people": "3"},
                    "unique_id": "curry garden",
                    "return": {"reference": "ab12cd34"},
                },
            },
            "train": {"search": {"parameters": {"day": "tuesday"}}},
        },
        user_goals=["indian food please", "book for 3", "also a tuesday train"],
    )
    env = load_scenario(record, registry)
    cfg = BeamConfig(branching_factor=2, max_beam=8, max_depth=6)
    agent = NoisyAgent(env, registry, seed=seed)
    user = NoisyUser(seed=seed, hangup_prob=0.05)
    tree = run_rollout(env, agent, user, cfg)

    for step in tree.step_log:
        assert step["leaves_after_user"] <= cfg.max_beam
        assert step.get("leaves_after_agent", 0) <= cfg.max_beam
    assert len(tree.leaves) <= cfg.max_beam

    ledger = tree.ledger
    assert ledger.average_reward == Fraction(len(ledger.achieved_log), 3)
    assert 0 <= ledger.average_reward <= 1
    replayed = sum((Fraction(1, ledger.goal_set_initial_size) for _ in ledger.achieved_log), Fraction(0))
    assert replayed == ledger.average_reward
    if tree.terminated_reason is TerminationReason.ALL_GOALS_ACHIEVED:
        assert ledger.average_reward == 1
    else:
        assert ledger.average_reward < 1

    # Prune correctness: active leaves descend from the root; every node is retained.
    for leaf in tree.leaves:
        assert tree.is_descendant(leaf, tree.root)
        assert not tree.children_of(leaf)
    assert tree.is_descendant(tree.root, tree.original_root)


@pytest.mark.parametrize("seed", [3, 17, 99])
def test_rollout_determinism(seed, registry):
    env = load_scenario(make_scenario_record(), registry)
    cfg = BeamConfig(branching_factor=2, max_beam=8, max_depth=6)

    def once():
        agent = NoisyAgent(env, registry, seed=seed)
        user = NoisyUser(seed=seed)
        return run_rollout(env, agent, user, cfg).to_dict()

    assert once() == once()


def test_goal_list_user_drives_oracle_to_success(registry):
    env = load_scenario(make_scenario_record(), registry)
    cfg = BeamConfig(branching_factor=1, max_beam=1, max_depth=10)
    tree = run_rollout(env, OracleAgent(env, registry), GoalListUser(), cfg)
    assert tree.terminated_reason is TerminationReason.ALL_GOALS_ACHIEVED


def test_average_reward_values():
    from turnbeam.tree import RewardLedger

    ledger = RewardLedger.for_goal_count(4)
    ledger.credit(0, 10)
    ledger.credit(2, 20)
    assert ledger.average_reward == Fraction(1, 2)

    empty = RewardLedger.for_goal_count(3)
    assert empty.average_reward == 0

    with pytest.raises(ValueError):
        RewardLedger.for_goal_count(0)


def test_beam_config_validation():
    with pytest.raises(ValueError):
        BeamConfig(branching_factor=0)
    with pytest.raises(ValueError):
        BeamConfig(branching_factor=4, max_beam=2)
    with pytest.raises(ValueError):
        BeamConfig(max_depth=0)
