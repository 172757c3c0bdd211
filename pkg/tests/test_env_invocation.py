"""Call validation: one of {valid, BadApiUse, IncorrectApiFormat}, always."""

from __future__ import annotations

import random

from turnbeam.env import (
    ApiInvocation,
    EnvError,
    ErrorCategory,
    looks_like_call,
    validate_invocation,
)


def test_structured_call_valid(registry):
    out = validate_invocation({"name": "search_hotel", "arguments": {"area": "North "}}, registry)
    assert isinstance(out, ApiInvocation)
    assert out.api_name == "search_hotel"
    assert out.arguments == {"area": "north"}


def test_structured_call_openai_nesting(registry):
    raw = {"function": {"name": "book_train", "arguments": '{"trainID": "TR2048", "people": "3"}'}}
    out = validate_invocation(raw, registry)
    assert isinstance(out, ApiInvocation)
    assert out.arguments == {"trainID": "tr2048", "people": "3"}


def test_unknown_api_is_bad_use(registry):
    out = validate_invocation({"name": "search_flight", "arguments": {}}, registry)
    assert isinstance(out, EnvError)
    assert out.category is ErrorCategory.BAD_API_USE


def test_unknown_argument_is_bad_use(registry):
    out = validate_invocation(
        {"name": "search_restaurant", "arguments": {"cuisine": "indian"}}, registry
    )
    assert isinstance(out, EnvError)
    assert out.category is ErrorCategory.BAD_API_USE
    assert "cuisine" in out.detail


def test_action_text_valid(registry):
    text = (
        "THOUGHT: the user wants a hotel up north\n"
        "ACTION: search_hotel\n"
        'ACTION INPUT: {"area": "north"}'
    )
    out = validate_invocation(text, registry)
    assert out == ApiInvocation("search_hotel", {"area": "north"})


def test_action_text_unterminated_json_is_format_error(registry):
    text = 'ACTION: search_hotel\nACTION INPUT: {"area": "north"'
    out = validate_invocation(text, registry)
    assert isinstance(out, EnvError)
    assert out.category is ErrorCategory.INCORRECT_API_FORMAT


def test_action_text_missing_input_line_is_format_error(registry):
    out = validate_invocation("ACTION: search_hotel", registry)
    assert isinstance(out, EnvError)
    assert out.category is ErrorCategory.INCORRECT_API_FORMAT


def test_action_text_non_object_payload_is_format_error(registry):
    out = validate_invocation('ACTION: search_hotel\nACTION INPUT: ["north"]', registry)
    assert isinstance(out, EnvError)
    assert out.category is ErrorCategory.INCORRECT_API_FORMAT


def test_structured_arguments_bad_json_is_format_error(registry):
    out = validate_invocation({"name": "search_hotel", "arguments": "{broken"}, registry)
    assert isinstance(out, EnvError)
    assert out.category is ErrorCategory.INCORRECT_API_FORMAT


def test_looks_like_call():
    assert looks_like_call("ACTION: search_hotel\nACTION INPUT: {}")
    assert looks_like_call("ACTION INPUT: {}")
    assert not looks_like_call("The hotel is in the north of town.")
    # Call markers count only at line starts, in the documented casing:
    # prose about actions is a plain message.
    assert not looks_like_call("Let me describe the action input: it holds the arguments.")
    assert not looks_like_call("I'll take ACTION: booking it for you")
    assert not looks_like_call("action: search_hotel\naction input: {}")


def test_validation_trichotomy_fuzzed(registry):
    # Every raw payload lands in exactly one of the three buckets.
    rng = random.Random(7)
    apis = ["search_hotel", "search_restaurant", "book_train", "search_flight", ""]
    arg_keys = ["area", "food", "trainID", "bogus", "people"]
    raws: list = []
    for _ in range(300):
        shape = rng.randrange(4)
        name = rng.choice(apis)
        args = {rng.choice(arg_keys): "x" for _ in range(rng.randrange(3))}
        if shape == 0:
            raws.append({"name": name, "arguments": args})
        elif shape == 1:
            raws.append(f"ACTION: {name}\nACTION INPUT: " + str(args))
        elif shape == 2:
            import json

            raws.append(f"ACTION: {name}\nACTION INPUT: " + json.dumps(args))
        else:
            raws.append(rng.choice(["hello there", "ACTION:", 42, None, ["x"]]))
    for raw in raws:
        out = validate_invocation(raw, registry)
        assert isinstance(out, (ApiInvocation, EnvError))
        if isinstance(out, EnvError):
            assert out.category in (ErrorCategory.BAD_API_USE, ErrorCategory.INCORRECT_API_FORMAT)
