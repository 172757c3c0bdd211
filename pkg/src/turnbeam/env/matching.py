"""Goal-completion rule.

A goal call g(x) is completed by an agent call f(y) when the API names
match and either x is a key/value subset of y, or both argument maps
queried against the scenario's database return exactly one row and it is
the same row.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from .types import ApiInvocation, GoalApiCall, mapping_subset

if TYPE_CHECKING:
    from .scenario import ScenarioEnv


def api_domain(api_name: str) -> str:
    """Domain of an API named ``<intent>_<domain>``."""
    _, _, domain = api_name.partition("_")
    return domain


def match_goal(goal: GoalApiCall, inv: ApiInvocation, env: ScenarioEnv) -> bool:
    if goal.api_name != inv.api_name:
        return False
    if mapping_subset(goal.arguments, inv.arguments):
        return True
    db = env.databases.get(api_domain(goal.api_name))
    if db is None:
        return False
    goal_rows = db.query(goal.arguments)
    call_rows = db.query(inv.arguments)
    return len(goal_rows) == 1 and len(call_rows) == 1 and goal_rows[0] == call_rows[0]
