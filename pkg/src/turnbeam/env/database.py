"""Per-scenario domain databases: querying and fail-intended cleaning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .types import canonical_args, mapping_subset


class ScenarioInconsistencyError(ValueError):
    """Raised when cleaning would remove a row a goal query depends on."""


@dataclass(frozen=True)
class DomainDatabase:
    """An ordered, canonicalized table of records for one domain.

    Row order is stable: serving falls back to the first row matching a
    query, so ordering is part of the contract.
    """

    domain: str
    rows: tuple[Mapping[str, str], ...]
    unique_id_field: str

    @classmethod
    def from_records(
        cls, domain: str, records: Iterable[Mapping[str, Any]], unique_id_field: str
    ) -> DomainDatabase:
        rows = tuple(canonical_args(r) for r in records)
        return cls(domain=domain, rows=rows, unique_id_field=unique_id_field)

    def query(self, args: Mapping[str, str]) -> list[Mapping[str, str]]:
        """Rows containing every key/value pair of ``args``, in table order."""
        args = canonical_args(args)
        return [row for row in self.rows if mapping_subset(args, row)]

    def row_for_unique_id(self, unique_id: str) -> Mapping[str, str] | None:
        for row in self.rows:
            if row.get(self.unique_id_field) == unique_id:
                return row
        return None

    def to_records(self) -> list[dict[str, str]]:
        return [dict(row) for row in self.rows]


def clean_database(db: DomainDatabase, goals: Mapping[str, Any]) -> DomainDatabase:
    """Remove every row a fail-intended query would match.

    After cleaning, each query listed under ``goals[domain]["fail_search"]``
    returns zero rows. Rows the scenario's own goals depend on must survive:
    losing the book goal's row, or emptying a previously non-empty goal
    search, is a contradictory scenario and raises
    ScenarioInconsistencyError. Idempotent by construction.
    """
    domain_goals = goals.get(db.domain, {}) or {}
    fail_specs = [canonical_args(spec) for spec in domain_goals.get("fail_search", [])]
    if not fail_specs:
        return db

    kept = tuple(
        row for row in db.rows if not any(mapping_subset(spec, row) for spec in fail_specs)
    )
    cleaned = DomainDatabase(domain=db.domain, rows=kept, unique_id_field=db.unique_id_field)

    book = domain_goals.get("book")
    if book is not None:
        uid = canonical_args({"u": book["unique_id"]})["u"]
        if db.row_for_unique_id(uid) is not None and cleaned.row_for_unique_id(uid) is None:
            raise ScenarioInconsistencyError(
                f"{db.domain}: cleaning removed the booked row (unique id {uid!r})"
            )

    search = domain_goals.get("search")
    if search is not None:
        params = canonical_args(search.get("parameters", {}))
        if db.query(params) and not cleaned.query(params):
            raise ScenarioInconsistencyError(
                f"{db.domain}: cleaning emptied the goal search query {params!r}"
            )

    return cleaned
