"""Adversarial search and booking serving.

The search API serves the goal row only when the query arguments line up
with the scenario's goal arguments; otherwise it deliberately serves a
non-goal row or the plain first table row. Booking succeeds only on an
exact unique-id match and is the sole source of return values such as
reference numbers.
"""

from __future__ import annotations

from typing import Any, Mapping

from .database import DomainDatabase
from .types import BookingResult, canonical_args, canonical_value, mapping_subset

# Unique-id argument of each book API; the matching database field carries
# the same name.
BOOK_UNIQUE_ID_PARAMETER = {"restaurant": "name", "hotel": "name", "train": "trainID"}


def serve_search(
    args: Mapping[str, Any],
    domain: str,
    goals: Mapping[str, Any],
    db: DomainDatabase,
) -> list[Mapping[str, str]]:
    """Serve database rows for a search call.

    Decision order, with ``goal_parameters`` the domain's search-goal
    arguments (empty map when the domain has no search goal — every query
    then trivially covers it):

    - query args cover the goal and a book goal exists: the booked row when
      the table holds it, else some row off the goal, else nothing;
    - query args are a subset of the goal: a row off the goal when one
      exists, else the booked row when a book goal exists and is present;
    - anything else falls through to the first table row.

    The table is served as-is — results depend on how the query relates to
    the goal, not on literal query filtering. Always returns a list: empty,
    or a single row.
    """
    args = canonical_args(args)
    domain_goals = goals.get(domain, {}) or {}
    goal_parameters = canonical_args(domain_goals.get("search", {}).get("parameters", {}))

    db_results = list(db.rows)

    booking_id: str | None = None
    if "book" in domain_goals:
        booking_id = canonical_value(domain_goals["book"]["unique_id"])

    correct_answer: Mapping[str, str] | None = None
    wrong_answer: Mapping[str, str] | None = None
    for result in db_results:
        if booking_id is not None and result.get(db.unique_id_field) == booking_id:
            correct_answer = result
        if not mapping_subset(goal_parameters, result):
            wrong_answer = result

    if mapping_subset(goal_parameters, args):
        if booking_id is not None:
            if correct_answer is not None:
                return [correct_answer]
            if wrong_answer is not None:
                return [wrong_answer]
            return []
    elif mapping_subset(args, goal_parameters):
        if wrong_answer is not None:
            return [wrong_answer]
        if booking_id is not None and correct_answer is not None:
            return [correct_answer]

    return db_results[:1]


def serve_booking(
    args: Mapping[str, Any],
    domain: str,
    goals: Mapping[str, Any],
) -> BookingResult:
    """Serve a booking call: success iff the unique id matches the book goal.

    Domains without a book goal, missing unique-id arguments, and id
    mismatches are all plain failures, never faults.
    """
    args = canonical_args(args)
    domain_goals = goals.get(domain, {}) or {}
    book = domain_goals.get("book")
    if book is None:
        return BookingResult(success=False)

    uid_param = BOOK_UNIQUE_ID_PARAMETER.get(domain)
    if uid_param is None:
        return BookingResult(success=False)

    if args.get(uid_param) == canonical_value(book["unique_id"]):
        return BookingResult(success=True, return_values=dict(book.get("return", {})))
    return BookingResult(success=False)
