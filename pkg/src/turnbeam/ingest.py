"""Converting source goal/database/transcript corpora into scenario files.

Expected source layout (an external download, never vendored)::

    source_dir/
      data.json           {dialogue_id: {"goal": {...}, "log": [{"text": ...}, ...]}}
      db/<domain>_db.json  one table per domain (restaurant, hotel, train, attraction)
      valListFile.txt      one dialogue id per line
      testListFile.txt
      checksums.json       optional {relative path: sha256 hex}

Per dialogue, each database domain present in the goal contributes one
search goal (from its "info" slots) and, when an intent to book exists,
one book goal; "fail_info" slots become fail-intended search specs handled
by per-scenario cleaning. Dialogues touching none of the four database
domains are not scenarios. Booking reference numbers are synthesized
deterministically at conversion time into the goal's return values; the
environment itself never invents one.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .env.registry import ApiRegistry
from .env.scenario import build_goal_set, canonicalize_goals
from .env.types import GoalApiCall, canonical_args, mapping_subset

DB_DOMAINS = ("restaurant", "hotel", "train", "attraction")

# Source keys that are bookkeeping, not slots.
IGNORED_GOAL_KEYS = {"invalid", "pre_invalid", "booked"}

SEARCH_INTENTS = {"info", "find", "search"}
BOOK_INTENTS = {"book"}
IGNORED_INTENTS = {"fail_book", "reqt"}  # booking failure is an id mismatch at runtime

# Aliases for slot spellings seen in source data, per domain.
SLOT_ALIASES = {
    "price range": "pricerange",
    "leaveat": "leaveAt",
    "arriveby": "arriveBy",
    "trainid": "trainID",
}


class ConversionError(ValueError):
    """Source goals cannot be mapped onto the API registry."""


def _map_slots(
    slots: Mapping[str, Any], spec_params: set[str], where: str
) -> dict[str, str]:
    mapped: dict[str, str] = {}
    unknown: list[str] = []
    for key, value in slots.items():
        k = str(key).strip()
        if k in IGNORED_GOAL_KEYS:
            continue
        if k not in spec_params:
            k = SLOT_ALIASES.get(k.lower(), k)
        if k not in spec_params:
            unknown.append(str(key))
            continue
        mapped[k] = str(value)
    if unknown:
        raise ConversionError(f"{where}: unmapped slot keys: {', '.join(sorted(unknown))}")
    return mapped


def _resolve_book_unique_id(
    domain: str,
    book_params: Mapping[str, str],
    search_params: Mapping[str, str],
    fail_specs: Sequence[Mapping[str, str]],
    rows: Sequence[Mapping[str, str]] | None,
    registry: ApiRegistry,
    where: str,
) -> str:
    uid_param = registry.api_for(domain, "book").unique_id_parameter
    explicit = book_params.get(uid_param)
    if explicit:
        return explicit
    if rows is None:
        raise ConversionError(
            f"{where}: book goal has no {uid_param!r} slot and no database to resolve it"
        )
    # Query the fail-cleaned table with the search goal; a unique hit names
    # the booked entity, otherwise the first served row does.
    params = canonical_args(search_params)
    fails = [canonical_args(s) for s in fail_specs]
    candidates = [
        row
        for row in rows
        if mapping_subset(params, row) and not any(mapping_subset(f, row) for f in fails)
    ]
    if not candidates:
        raise ConversionError(
            f"{where}: no database row satisfies the search goal; cannot pick a booked entity"
        )
    uid_field = registry.db_unique_id_field(domain)
    return candidates[0][uid_field]


def synth_reference(scenario_id: str, domain: str) -> str:
    return hashlib.sha1(f"{scenario_id}:{domain}".encode("utf-8")).hexdigest()[:8]


def convert_domain_goals(
    domain: str,
    intents: Mapping[str, Any],
    registry: ApiRegistry,
    scenario_id: str = "",
    rows: Sequence[Mapping[str, str]] | None = None,
) -> dict[str, Any]:
    """One domain's source intents -> scenario goals entry."""
    search_spec = registry.api_for(domain, "search")
    if search_spec is None:
        raise ConversionError(f"goal.{domain}: unknown domain {domain!r}")
    entry: dict[str, Any] = {}
    fail_specs: list[dict[str, str]] = []

    for intent, slots in intents.items():
        if intent in IGNORED_INTENTS or not slots:
            continue
        where = f"goal.{domain}.{intent}"
        if intent in SEARCH_INTENTS:
            entry["search"] = {
                "parameters": _map_slots(slots, search_spec.parameter_names(), where)
            }
        elif intent == "fail_info":
            fail_specs.append(_map_slots(slots, search_spec.parameter_names(), where))
        elif intent in BOOK_INTENTS:
            book_spec = registry.api_for(domain, "book")
            if book_spec is None:
                raise ConversionError(f"{where}: domain {domain!r} has no book API")
            entry["book"] = {
                "parameters": _map_slots(slots, book_spec.parameter_names(), where)
            }
        else:
            raise ConversionError(f"{where}: unknown intent {intent!r}")

    if "book" in entry:
        search_params = entry.get("search", {}).get("parameters", {})
        unique_id = _resolve_book_unique_id(
            domain,
            entry["book"]["parameters"],
            search_params,
            fail_specs,
            rows,
            registry,
            where=f"goal.{domain}.book",
        )
        entry["book"]["unique_id"] = unique_id
        entry["book"]["return"] = {"reference": synth_reference(scenario_id, domain)}
    if fail_specs:
        entry["fail_search"] = fail_specs
    return entry


def convert_goals(
    goal_dict: Mapping[str, Any],
    registry: ApiRegistry,
    scenario_id: str = "",
    databases: Mapping[str, Sequence[Mapping[str, str]]] | None = None,
) -> list[GoalApiCall]:
    """Source domain/intent/slot map -> ordered goal API calls."""
    goals: dict[str, Any] = {}
    for domain, intents in goal_dict.items():
        if domain not in DB_DOMAINS:
            continue
        if not intents:
            continue
        rows = None
        if databases is not None and domain in databases:
            rows = [canonical_args(r) for r in databases[domain]]
        entry = convert_domain_goals(domain, intents, registry, scenario_id, rows)
        if entry:
            goals[domain] = entry
    return list(build_goal_set(canonicalize_goals(goals), registry))


def build_scenario_record(
    scenario_id: str,
    source: Mapping[str, Any],
    registry: ApiRegistry,
    databases: Mapping[str, Sequence[Mapping[str, str]]],
    db_refs: Mapping[str, str] | None = None,
) -> dict[str, Any] | None:
    """Full scenario record for one source dialogue; None when the dialogue
    touches no database domain."""
    goal = source.get("goal", {})
    goals: dict[str, Any] = {}
    for domain in DB_DOMAINS:
        intents = goal.get(domain)
        if not intents:
            continue
        rows = [canonical_args(r) for r in databases.get(domain, ())]
        entry = convert_domain_goals(domain, intents, registry, scenario_id, rows)
        if entry:
            goals[domain] = entry
    if not goals:
        return None

    if db_refs is not None:
        db_snapshot: Mapping[str, Any] = {d: db_refs[d] for d in goals if d in db_refs}
    else:
        db_snapshot = {d: list(databases.get(d, ())) for d in goals}

    transcript = [turn["text"] for turn in source.get("log", []) if "text" in turn]
    return {
        "scenario_id": scenario_id,
        "goals": goals,
        "databases": db_snapshot,
        "user_goals": [str(m) for m in goal.get("message", [])],
        "transcript": transcript,
    }


@dataclass(frozen=True)
class SplitManifest:
    split: str
    scenario_ids: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"split": self.split, "scenario_ids": list(self.scenario_ids)}


OFFICIAL_TEST_SIZE = 450


def build_splits(
    scenario_ids: Sequence[str],
    val_ids: Sequence[str],
    test_ids: Sequence[str],
    expected_counts: Mapping[str, int] | None = None,
) -> dict[str, SplitManifest]:
    """Deterministic split manifests; official_test is the head of test.

    ``expected_counts`` (split name -> size) triggers a warning with the
    diff when the produced manifests disagree.
    """
    ids = list(scenario_ids)
    id_set = set(ids)
    val = tuple(i for i in val_ids if i in id_set)
    test = tuple(i for i in test_ids if i in id_set)
    held_out = set(val) | set(test)
    train = tuple(i for i in ids if i not in held_out)

    manifests = {
        "train": SplitManifest("train", train),
        "val": SplitManifest("val", val),
        "test": SplitManifest("test", test),
        "official_test": SplitManifest("official_test", test[:OFFICIAL_TEST_SIZE]),
    }
    if expected_counts:
        diffs = {
            split: (expected_counts[split], len(manifests[split].scenario_ids))
            for split in expected_counts
            if split in manifests
            and expected_counts[split] != len(manifests[split].scenario_ids)
        }
        if diffs:
            detail = ", ".join(
                f"{s}: expected {exp}, got {got}" for s, (exp, got) in sorted(diffs.items())
            )
            warnings.warn(f"split counts differ from the expected manifest: {detail}")
    return manifests


def verify_checksums(source_dir: str | Path) -> list[str]:
    """Compare files against checksums.json when present; returns mismatches."""
    source_dir = Path(source_dir)
    manifest_path = source_dir / "checksums.json"
    if not manifest_path.exists():
        return []
    expected = json.loads(manifest_path.read_text())
    mismatches = []
    for rel, digest in expected.items():
        path = source_dir / rel
        if not path.exists():
            mismatches.append(f"{rel}: missing")
            continue
        actual = hashlib.sha256(path.read_bytes()).hexdigest()
        if actual != digest:
            mismatches.append(f"{rel}: checksum mismatch")
    if mismatches:
        warnings.warn("source data failed checksum validation: " + "; ".join(mismatches))
    return mismatches


@dataclass
class IngestSummary:
    counts: dict[str, int] = field(default_factory=dict)
    total: int = 0
    single_domain: int = 0
    multi_domain: int = 0
    skipped: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "counts": dict(self.counts),
            "total": self.total,
            "single_domain": self.single_domain,
            "multi_domain": self.multi_domain,
            "skipped": list(self.skipped),
        }


def _read_id_list(path: Path) -> list[str]:
    if not path.exists():
        return []
    return [line.strip() for line in path.read_text().splitlines() if line.strip()]


def ingest_source(
    source_dir: str | Path,
    out_dir: str | Path,
    registry: ApiRegistry,
    expected_counts: Mapping[str, int] | None = None,
) -> IngestSummary:
    """Convert a source corpus into scenario files plus split manifests.

    Writes ``<split>.jsonl`` per split, shared tables under ``db/``, and
    ``manifests.json``. Dialogues that fail conversion are skipped and
    reported in the summary.
    """
    source_dir = Path(source_dir)
    out_dir = Path(out_dir)
    data_path = source_dir / "data.json"
    if not data_path.exists():
        raise FileNotFoundError(f"source data not found: {data_path}")
    verify_checksums(source_dir)

    data = json.loads(data_path.read_text())
    databases: dict[str, list[dict[str, str]]] = {}
    for domain in DB_DOMAINS:
        db_path = source_dir / "db" / f"{domain}_db.json"
        if db_path.exists():
            databases[domain] = [canonical_args(r) for r in json.loads(db_path.read_text())]

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "db").mkdir(exist_ok=True)
    db_refs = {}
    for domain, rows in databases.items():
        ref = f"db/{domain}.json"
        (out_dir / ref).write_text(json.dumps(rows, sort_keys=True))
        db_refs[domain] = ref

    summary = IngestSummary()
    records: dict[str, dict[str, Any]] = {}
    for dialogue_id, source in data.items():
        try:
            record = build_scenario_record(
                dialogue_id, source, registry, databases, db_refs=db_refs
            )
        except ConversionError as e:
            summary.skipped.append(f"{dialogue_id}: {e}")
            continue
        except (AttributeError, KeyError, TypeError) as e:
            summary.skipped.append(f"{dialogue_id}: malformed source entry ({e})")
            continue
        if record is None:
            continue
        records[dialogue_id] = record
        if len(record["goals"]) == 1:
            summary.single_domain += 1
        else:
            summary.multi_domain += 1

    manifests = build_splits(
        list(records),
        _read_id_list(source_dir / "valListFile.txt"),
        _read_id_list(source_dir / "testListFile.txt"),
        expected_counts=expected_counts,
    )
    for split in ("train", "val", "test"):
        manifest = manifests[split]
        path = out_dir / f"{split}.jsonl"
        with open(path, "w", encoding="utf-8") as f:
            for sid in manifest.scenario_ids:
                f.write(json.dumps(records[sid], sort_keys=True) + "\n")
        summary.counts[split] = len(manifest.scenario_ids)
    summary.counts["official_test"] = len(manifests["official_test"].scenario_ids)
    summary.total = len(records)

    (out_dir / "manifests.json").write_text(
        json.dumps({s: m.to_dict() for s, m in manifests.items()}, indent=2, sort_keys=True)
    )
    return summary
