from __future__ import annotations

import pytest

from turnbeam.env import default_registry, load_scenario

# Canonical 4-row restaurant table used throughout the serving/matching tests.
RESTAURANT_ROWS = [
    {"name": "curry garden", "food": "indian", "area": "centre", "pricerange": "moderate"},
    {"name": "golden wok", "food": "chinese", "area": "north", "pricerange": "cheap"},
    {"name": "pizza palace", "food": "italian", "area": "centre", "pricerange": "expensive"},
    {"name": "curry prince", "food": "indian", "area": "east", "pricerange": "moderate"},
]

TRAIN_ROWS = [
    {"trainID": "TR1001", "day": "tuesday", "departure": "cambridge", "destination": "london kings cross", "leaveAt": "08:00"},
    {"trainID": "TR2002", "day": "wednesday", "departure": "cambridge", "destination": "london kings cross", "leaveAt": "09:00"},
    {"trainID": "TR3003", "day": "wednesday", "departure": "ely", "destination": "cambridge", "leaveAt": "10:00"},
]


@pytest.fixture(scope="session")
def registry():
    return default_registry()


def make_scenario_record(
    scenario_id: str = "SNG0001",
    goals: dict | None = None,
    databases: dict | None = None,
    user_goals: list[str] | None = None,
    transcript: list[str] | None = None,
) -> dict:
    record = {
        "scenario_id": scenario_id,
        "goals": goals
        if goals is not None
        else {
            "restaurant": {
                "search": {"parameters": {"food": "indian"}},
                "book": {
                    "parameters": {"people": "3", "day": "tuesday", "time": "13:00"},
                    "unique_id": "curry garden",
                    "return": {"reference": "ab12cd34"},
                },
            }
        },
        "databases": databases if databases is not None else {"restaurant": RESTAURANT_ROWS},
        "user_goals": user_goals
        if user_goals is not None
        else [
            "You are looking for an indian restaurant.",
            "Book a table for 3 people at 13:00 on tuesday.",
        ],
    }
    if transcript is not None:
        record["transcript"] = transcript
    return record


@pytest.fixture
def restaurant_scenario(registry):
    return load_scenario(make_scenario_record(), registry)
