"""Goal matching against an independent brute-force oracle."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from turnbeam.env import ApiInvocation, GoalApiCall, load_scenario, match_goal

from conftest import RESTAURANT_ROWS, TRAIN_ROWS, make_scenario_record


def oracle_match(goal: GoalApiCall, inv: ApiInvocation, env) -> bool:
    """Straight-line restatement of the completion rule, written first and
    kept independent of the production path: explicit loops, no helpers."""
    if goal.api_name != inv.api_name:
        return False

    subset = True
    for key in goal.arguments:
        if key not in inv.arguments or inv.arguments[key] != goal.arguments[key]:
            subset = False
            break
    if subset:
        return True

    domain = goal.api_name.split("_", 1)[1]
    if domain not in env.databases:
        return False
    rows = env.databases[domain].rows

    def run_query(args):
        hits = []
        for row in rows:
            ok = True
            for k, v in args.items():
                if row.get(k) != v:
                    ok = False
                    break
            if ok:
                hits.append(row)
        return hits

    g_rows = run_query(goal.arguments)
    f_rows = run_query(inv.arguments)
    return len(g_rows) == 1 and len(f_rows) == 1 and g_rows[0] == f_rows[0]


@pytest.fixture(scope="module")
def two_domain_env(registry):
    record = make_scenario_record(
        goals={
            "restaurant": {"search": {"parameters": {"food": "indian"}}},
            "train": {"search": {"parameters": {"day": "tuesday", "departure": "cambridge"}}},
        },
        databases={"restaurant": RESTAURANT_ROWS, "train": TRAIN_ROWS},
        user_goals=["find an indian restaurant", "find a tuesday train"],
    )
    return load_scenario(record, registry)


def test_subset_match(two_domain_env):
    goal = GoalApiCall("search_restaurant", {"food": "indian"})
    inv = ApiInvocation("search_restaurant", {"food": "indian", "area": "centre"})
    assert match_goal(goal, inv, two_domain_env) is True


def test_api_name_mismatch(two_domain_env):
    goal = GoalApiCall("search_hotel", {"stars": "4"})
    inv = ApiInvocation("search_restaurant", {"stars": "4"})
    assert match_goal(goal, inv, two_domain_env) is False


def test_single_row_rule(two_domain_env):
    # The fixture table holds exactly one tuesday train; both queries hit
    # only that row, so the call completes the goal without covering it.
    goal = GoalApiCall("search_train", {"day": "tuesday", "departure": "cambridge"})
    inv = ApiInvocation("search_train", {"day": "tuesday"})
    rows = two_domain_env.databases["train"].rows
    assert sum(1 for r in rows if r.get("day") == "tuesday") == 1  # fixture sanity
    assert match_goal(goal, inv, two_domain_env) is True


def test_single_row_rule_requires_same_row(two_domain_env):
    goal = GoalApiCall("search_train", {"trainID": "tr1001"})
    inv = ApiInvocation("search_train", {"trainID": "tr3003"})
    assert match_goal(goal, inv, two_domain_env) is False


def test_multi_row_queries_do_not_match(two_domain_env):
    goal = GoalApiCall("search_train", {"day": "wednesday", "departure": "cambridge"})
    inv = ApiInvocation("search_train", {"day": "wednesday"})  # two wednesday trains
    assert match_goal(goal, inv, two_domain_env) is False


FIELD_VALUES = {
    "search_restaurant": {
        "food": ["indian", "chinese", "italian"],
        "area": ["centre", "north", "east"],
        "pricerange": ["cheap", "moderate", "expensive"],
        "name": ["curry garden", "golden wok", "pizza palace", "curry prince"],
    },
    "search_train": {
        "day": ["tuesday", "wednesday"],
        "departure": ["cambridge", "ely"],
        "destination": ["london kings cross", "cambridge"],
        "trainID": ["tr1001", "tr2002", "tr3003"],
    },
}


def random_args(rng, api):
    fields = FIELD_VALUES[api]
    keys = rng.sample(sorted(fields), k=rng.randint(0, len(fields)))
    return {k: rng.choice(fields[k]) for k in keys}


def test_match_goal_agrees_with_oracle_on_randomized_pairs(two_domain_env):
    rng = random.Random(20240817)
    disagreements = 0
    for _ in range(1000):
        g_api = rng.choice(list(FIELD_VALUES))
        f_api = rng.choice(list(FIELD_VALUES))
        goal = GoalApiCall(g_api, random_args(rng, g_api))
        inv = ApiInvocation(f_api, random_args(rng, f_api))
        if match_goal(goal, inv, two_domain_env) != oracle_match(goal, inv, two_domain_env):
            disagreements += 1
    assert disagreements == 0


@given(
    goal_args=st.dictionaries(
        st.sampled_from(["food", "area", "pricerange", "name"]),
        st.sampled_from(["indian", "centre", "cheap", "x"]),
        max_size=3,
    ),
    extra_args=st.dictionaries(
        st.sampled_from(["food", "area", "pricerange", "name"]),
        st.sampled_from(["indian", "centre", "cheap", "x"]),
        max_size=3,
    ),
)
def test_covering_call_always_matches(registry, goal_args, extra_args):
    # Subset soundness: same API, call arguments covering the goal's.
    env = load_scenario(make_scenario_record(), registry)
    goal = GoalApiCall("search_restaurant", dict(goal_args))
    inv = ApiInvocation("search_restaurant", {**extra_args, **goal_args})
    assert match_goal(goal, inv, env) is True
