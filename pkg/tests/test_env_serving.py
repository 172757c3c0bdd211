"""Serving decision table, booking gate, and database cleaning."""

from __future__ import annotations

import pytest

from turnbeam.env import (
    DomainDatabase,
    ScenarioInconsistencyError,
    clean_database,
    serve_booking,
    serve_search,
)

from conftest import RESTAURANT_ROWS


def db_from(rows, domain="restaurant", uid="name"):
    return DomainDatabase.from_records(domain, rows, uid)


R0, R1, R2, R3 = range(4)


def goals_with(search_params=None, book_uid=None, fail_search=None, returns=None):
    entry = {}
    if search_params is not None:
        entry["search"] = {"parameters": search_params}
    if book_uid is not None:
        entry["book"] = {"unique_id": book_uid, "return": returns or {"reference": "ab12cd34"}}
    if fail_search is not None:
        entry["fail_search"] = fail_search
    return {"restaurant": entry}


# ---------------------------------------------------------------------------
# Search decision table. Rows R0..R3 as in conftest; goal food=indian unless
# stated. Expected values hand-derived from the branch rules:
#   correct_answer = table row whose unique id equals the book goal's id
#   wrong_answer   = LAST table row not covering the goal parameters
# ---------------------------------------------------------------------------

FULL = RESTAURANT_ROWS
NO_BOOKED_ROW = [RESTAURANT_ROWS[i] for i in (R1, R2, R3)]  # curry garden absent
ONLY_OTHER_INDIAN = [RESTAURANT_ROWS[R3]]  # all rows cover the goal, none booked

SEARCH_CASES = [
    # id, rows, goals, args, expected row indices into `rows`
    (
        "goal-covered+booked-row-present->booked-row",
        FULL,
        goals_with({"food": "indian"}, book_uid="curry garden"),
        {"food": "indian", "area": "centre"},
        [R0],
    ),
    (
        "goal-covered+booked-row-absent->off-goal-row",
        NO_BOOKED_ROW,
        goals_with({"food": "indian"}, book_uid="curry garden"),
        {"food": "indian"},
        [1],  # last row of NO_BOOKED_ROW not covering food=indian: pizza palace
    ),
    (
        "goal-covered+nothing-to-misdirect-with->empty",
        ONLY_OTHER_INDIAN,
        goals_with({"food": "indian"}, book_uid="curry garden"),
        {"food": "indian"},
        [],
    ),
    (
        "goal-covered+no-book-goal->falls-through-to-first-row",
        FULL,
        goals_with({"food": "indian"}),
        {"food": "indian", "pricerange": "moderate"},
        [R0],
    ),
    (
        "query-under-goal->off-goal-row",
        FULL,
        goals_with({"food": "indian", "area": "centre"}, book_uid="curry garden"),
        {"food": "indian"},
        [R3],  # last row not covering (indian, centre)
    ),
    (
        "query-under-goal+every-row-on-goal->booked-row",
        [RESTAURANT_ROWS[R0], RESTAURANT_ROWS[R3]],
        goals_with({"food": "indian"}, book_uid="curry garden"),
        {},
        [0],
    ),
    (
        "query-under-goal+every-row-on-goal+no-book->first-row",
        [RESTAURANT_ROWS[R0], RESTAURANT_ROWS[R3]],
        goals_with({"food": "indian"}),
        {},
        [0],
    ),
    (
        "incomparable-query->first-row",
        FULL[:3],
        goals_with({"food": "indian"}, book_uid="curry garden"),
        {"area": "west"},
        [R0],
    ),
    (
        "no-search-goal-acts-as-empty-params+no-book->first-row",
        FULL,
        {"restaurant": {}},
        {"food": "chinese"},
        [R0],
    ),
    (
        "no-search-goal+book-goal->booked-row",
        FULL,
        goals_with(None, book_uid="golden wok"),
        {"food": "chinese"},
        [R1],
    ),
    (
        "empty-table->empty-list",
        [],
        goals_with({"food": "indian"}),
        {"food": "indian"},
        [],
    ),
]


@pytest.mark.parametrize(
    "rows,goals,args,expected", [c[1:] for c in SEARCH_CASES], ids=[c[0] for c in SEARCH_CASES]
)
def test_search_decision_table(rows, goals, args, expected):
    db = db_from(rows)
    result = serve_search(args, "restaurant", goals, db)
    assert result == [db.rows[i] for i in expected]


def test_search_always_returns_list_of_at_most_one():
    db = db_from(FULL)
    goals = goals_with({"food": "indian"}, book_uid="curry garden")
    for args in ({}, {"food": "indian"}, {"area": "west"}, {"food": "thai"}):
        out = serve_search(args, "restaurant", goals, db)
        assert isinstance(out, list) and len(out) <= 1


def test_search_serves_booked_row_when_goal_covered_and_row_present():
    # On a consistent scenario (booked row in table), covering the goal
    # always serves the booked row, whatever else the query adds.
    db = db_from(FULL)
    goals = goals_with({"food": "indian"}, book_uid="curry prince")
    for extra in ({}, {"area": "east"}, {"pricerange": "moderate", "name": "curry prince"}):
        args = {"food": "indian", **extra}
        out = serve_search(args, "restaurant", goals, db)
        assert out == [db.rows[R3]]


# ---------------------------------------------------------------------------
# Booking gate: exhaustive over (goal present?, id match?) on the fixture.
# ---------------------------------------------------------------------------


def test_booking_success_returns_goal_values():
    goals = goals_with({"food": "indian"}, book_uid="curry garden", returns={"reference": "zz99"})
    out = serve_booking({"name": "Curry Garden ", "people": "3"}, "restaurant", goals)
    assert out.success is True
    assert out.return_values == {"reference": "zz99"}
    assert out.to_payload() == {"success": True, "return": {"reference": "zz99"}}


def test_booking_mismatch_fails():
    goals = goals_with({"food": "indian"}, book_uid="curry garden")
    out = serve_booking({"name": "golden wok"}, "restaurant", goals)
    assert out.success is False
    assert out.to_payload() == {"success": False, "return": None}


def test_booking_without_goal_fails():
    out = serve_booking({"name": "curry garden"}, "restaurant", goals_with({"food": "indian"}))
    assert out.success is False


def test_booking_gate_exhaustive():
    # Every (book goal id, args id) combination on a 4-row fixture: success
    # iff ids match, and only then.
    names = [r["name"] for r in RESTAURANT_ROWS]
    for goal_name in names:
        goals = goals_with(None, book_uid=goal_name)
        for arg_name in names + ["nonexistent place"]:
            out = serve_booking({"name": arg_name}, "restaurant", goals)
            assert out.success is (arg_name == goal_name)


def test_booking_missing_unique_id_argument_fails():
    goals = goals_with(None, book_uid="curry garden")
    assert serve_booking({"people": "3"}, "restaurant", goals).success is False


def test_booking_train_uses_trainID():
    goals = {"train": {"book": {"unique_id": "TR1001", "return": {"reference": "ref1"}}}}
    ok = serve_booking({"trainID": "tr1001", "people": "2"}, "train", goals)
    assert ok.success is True
    bad = serve_booking({"trainID": "TR2002"}, "train", goals)
    assert bad.success is False


# ---------------------------------------------------------------------------
# Cleaning
# ---------------------------------------------------------------------------


def test_clean_removes_fail_query_rows():
    db = db_from(FULL)
    goals = goals_with({"food": "italian"}, fail_search=[{"food": "indian"}])
    cleaned = clean_database(db, goals)
    # Before: fail query matched 2 rows. After: zero, others intact.
    assert len(db.query({"food": "indian"})) == 2
    assert cleaned.query({"food": "indian"}) == []
    assert len(cleaned.rows) == 2
    assert cleaned.query({"food": "italian"}) == [db.rows[R2]]


def test_clean_hotel_fail_query_removes_all_matching_rows():
    hotel_rows = [
        {"name": "alpha lodge", "area": "centre", "pricerange": "cheap"},
        {"name": "beta house", "area": "centre", "pricerange": "cheap"},
        {"name": "gamma inn", "area": "centre", "pricerange": "cheap"},
        {"name": "delta hotel", "area": "north", "pricerange": "moderate"},
    ]
    db = db_from(hotel_rows, domain="hotel")
    goals = {
        "hotel": {
            "search": {"parameters": {"area": "north"}},
            "fail_search": [{"area": "centre", "pricerange": "cheap"}],
        }
    }
    assert len(db.query({"area": "centre", "pricerange": "cheap"})) == 3
    cleaned = clean_database(db, goals)
    assert cleaned.query({"area": "centre", "pricerange": "cheap"}) == []
    assert len(cleaned.rows) == 1


def test_clean_without_fail_specs_is_identity():
    db = db_from(FULL)
    assert clean_database(db, goals_with({"food": "indian"})) is db


def test_clean_is_idempotent():
    db = db_from(FULL)
    goals = goals_with({"food": "italian"}, fail_search=[{"area": "north"}])
    once = clean_database(db, goals)
    twice = clean_database(once, goals)
    assert once == twice


def test_clean_raises_when_booked_row_would_vanish():
    db = db_from(FULL)
    goals = goals_with(
        {"food": "italian"}, book_uid="curry garden", fail_search=[{"food": "indian"}]
    )
    with pytest.raises(ScenarioInconsistencyError):
        clean_database(db, goals)


def test_clean_raises_when_goal_search_would_empty():
    db = db_from(FULL)
    goals = goals_with({"food": "chinese"}, fail_search=[{"area": "north"}])
    with pytest.raises(ScenarioInconsistencyError):
        clean_database(db, goals)


def test_clean_fail_query_on_all_domains_checked_separately():
    # fail specs only apply to their own domain
    db = db_from([{"trainID": "TR1", "day": "monday"}], domain="train", uid="trainID")
    goals = {"restaurant": {"fail_search": [{"day": "monday"}]}}
    assert clean_database(db, goals) is db
