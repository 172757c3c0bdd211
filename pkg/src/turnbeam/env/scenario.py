"""Scenario environments: one conversation's goals, databases, and user goals.

Scenario files are newline-delimited JSON records. Each record is
self-contained: per-domain goal dictionaries (search parameters, book
unique id and return values, fail-intended search specs), database
snapshots (inline rows or a path reference to a shared table, resolved
relative to the scenario file), natural-language user goals, and an
optional source transcript for the guide simulator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Mapping

from .database import DomainDatabase, clean_database
from .matching import api_domain
from .registry import ApiRegistry
from .serving import serve_booking, serve_search
from .types import ApiInvocation, GoalApiCall, canonical_args, canonical_value


class ScenarioLoadError(ValueError):
    """A scenario record is malformed; the message names the offending field."""


@dataclass(frozen=True)
class ScenarioEnv:
    """Immutable per-conversation environment; safe to share across branches."""

    scenario_id: str
    goal_set: tuple[GoalApiCall, ...]
    goals: Mapping[str, Any]  # per-domain goal dictionary driving serving
    databases: Mapping[str, DomainDatabase]  # already cleaned for this scenario
    user_goals: tuple[str, ...]
    source_transcript: tuple[str, ...] | None = None

    def execute_call(self, inv: ApiInvocation) -> Any:
        """Run a validated invocation against this scenario's serving functions.

        Search calls return a list of rows; book calls return the
        success/return payload.
        """
        domain = api_domain(inv.api_name)
        if inv.api_name.startswith("book_"):
            return serve_booking(inv.arguments, domain, self.goals).to_payload()
        db = self.databases.get(domain)
        if db is None:
            db = DomainDatabase(domain=domain, rows=(), unique_id_field="name")
        return [dict(r) for r in serve_search(inv.arguments, domain, self.goals, db)]


def _require(record: Mapping[str, Any], key: str) -> Any:
    if key not in record:
        raise ScenarioLoadError(f"scenario record missing field {key!r}")
    return record[key]


def canonicalize_goals(raw_goals: Mapping[str, Any]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for domain, intents in raw_goals.items():
        entry: dict[str, Any] = {}
        if "search" in intents:
            entry["search"] = {
                "parameters": canonical_args(intents["search"].get("parameters", {}))
            }
        if "book" in intents:
            book = intents["book"]
            if "unique_id" not in book:
                raise ScenarioLoadError(f"goals.{domain}.book missing field 'unique_id'")
            entry["book"] = {
                "parameters": canonical_args(book.get("parameters", {})),
                "unique_id": canonical_value(book["unique_id"]),
                "return": {str(k): str(v) for k, v in book.get("return", {}).items()},
            }
        if intents.get("fail_search"):
            entry["fail_search"] = [canonical_args(s) for s in intents["fail_search"]]
        out[domain] = entry
    return out


def build_goal_set(goals: Mapping[str, Any], registry: ApiRegistry) -> tuple[GoalApiCall, ...]:
    goal_set: list[GoalApiCall] = []
    for domain, intents in goals.items():
        for intent in ("search", "book"):
            if intent not in intents:
                continue
            spec = registry.api_for(domain, intent)
            if spec is None:
                raise ScenarioLoadError(f"goals.{domain}: no {intent} API for domain {domain!r}")
            params = dict(intents[intent].get("parameters", {}))
            unknown = sorted(set(params) - spec.parameter_names())
            if unknown:
                raise ScenarioLoadError(
                    f"goals.{domain}.{intent}: unknown parameters {', '.join(unknown)}"
                )
            if intent == "search":
                goal_set.append(GoalApiCall(api_name=spec.name, arguments=params))
            else:
                uid = intents[intent]["unique_id"]
                arguments = dict(params)
                if spec.unique_id_parameter is not None:
                    arguments[spec.unique_id_parameter] = uid
                goal_set.append(
                    GoalApiCall(
                        api_name=spec.name,
                        arguments=arguments,
                        unique_id=uid,
                        return_values=dict(intents[intent].get("return", {})),
                    )
                )
        for fail_spec in intents.get("fail_search", []):
            spec = registry.api_for(domain, "search")
            if spec is None:
                raise ScenarioLoadError(f"goals.{domain}: no search API for domain {domain!r}")
            unknown = sorted(set(fail_spec) - spec.parameter_names())
            if unknown:
                raise ScenarioLoadError(
                    f"goals.{domain}.fail_search: unknown parameters {', '.join(unknown)}"
                )
    return tuple(goal_set)


def load_scenario(
    record: Mapping[str, Any],
    registry: ApiRegistry,
    base_dir: str | Path | None = None,
) -> ScenarioEnv:
    """Materialize a scenario record: canonicalize goals, clean databases.

    Database snapshots given as string references are loaded from
    ``base_dir``; each scenario cleans its own copy, so shared tables are
    never mutated.
    """
    scenario_id = str(_require(record, "scenario_id"))
    goals = canonicalize_goals(_require(record, "goals"))
    goal_set = build_goal_set(goals, registry)
    if not goal_set:
        raise ScenarioLoadError(f"scenario {scenario_id}: goal set is empty")

    databases: dict[str, DomainDatabase] = {}
    for domain, snapshot in record.get("databases", {}).items():
        if isinstance(snapshot, str):
            if base_dir is None:
                raise ScenarioLoadError(
                    f"databases.{domain}: reference {snapshot!r} given without a base directory"
                )
            path = Path(base_dir) / snapshot
            try:
                with open(path, encoding="utf-8") as f:
                    rows = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                raise ScenarioLoadError(f"databases.{domain}: cannot load {snapshot!r}: {e}") from e
        else:
            rows = snapshot
        if not isinstance(rows, list):
            raise ScenarioLoadError(f"databases.{domain}: snapshot must be a list of rows")
        try:
            uid_field = registry.db_unique_id_field(domain)
        except KeyError:
            raise ScenarioLoadError(f"databases.{domain}: unknown domain {domain!r}") from None
        db = DomainDatabase.from_records(domain, rows, uid_field)
        databases[domain] = clean_database(db, goals)

    return ScenarioEnv(
        scenario_id=scenario_id,
        goal_set=goal_set,
        goals=goals,
        databases=databases,
        user_goals=tuple(str(g) for g in record.get("user_goals", [])),
        source_transcript=(
            tuple(str(t) for t in record["transcript"]) if record.get("transcript") else None
        ),
    )


def scenario_env_to_record(env: ScenarioEnv) -> dict[str, Any]:
    """Serialize an environment back to a self-contained record (inline DBs)."""
    return {
        "scenario_id": env.scenario_id,
        "goals": {d: dict(intents) for d, intents in env.goals.items()},
        "databases": {d: db.to_records() for d, db in env.databases.items()},
        "user_goals": list(env.user_goals),
        "transcript": list(env.source_transcript) if env.source_transcript else None,
    }


def iter_scenario_records(path: str | Path) -> Iterator[dict[str, Any]]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise ScenarioLoadError(f"{path}:{lineno}: invalid record: {e.msg}") from e


def read_scenario_file(path: str | Path, registry: ApiRegistry) -> list[ScenarioEnv]:
    base_dir = Path(path).parent
    return [load_scenario(rec, registry, base_dir=base_dir) for rec in iter_scenario_records(path)]


def write_scenario_file(path: str | Path, records: list[Mapping[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
