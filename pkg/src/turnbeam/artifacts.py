"""Rollout artifact files: one JSON document per scenario.

An artifact carries the full node map, ledger, run configuration, backend
descriptors and an events digest — everything needed to re-extract
datasets without re-simulation. Writes are atomic (temp file + rename) so
interrupted runs never leave half-written artifacts behind.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Mapping

from .tree import RolloutTree


def write_json_atomic(path: str | Path, obj: Any, indent: int | None = 2) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(obj, f, sort_keys=True, indent=indent)
            f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def events_digest(tree: RolloutTree) -> str:
    """Stable fingerprint of every node's events, for reproducibility checks."""
    payload = json.dumps(
        [tree.nodes[k].to_dict() for k in sorted(tree.nodes)],
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def rollout_artifact(
    tree: RolloutTree,
    config: Mapping[str, Any],
    seed: int,
    backend: Mapping[str, Any],
) -> dict[str, Any]:
    doc = tree.to_dict()
    doc["config"] = dict(config)
    doc["seed"] = seed
    doc["backend"] = dict(backend)
    doc["events_digest"] = events_digest(tree)
    return doc


def artifact_path(out_dir: str | Path, scenario_id: str) -> Path:
    return Path(out_dir) / f"{scenario_id}.json"


def write_rollout_artifact(
    out_dir: str | Path,
    tree: RolloutTree,
    config: Mapping[str, Any],
    seed: int,
    backend: Mapping[str, Any],
) -> Path:
    path = artifact_path(out_dir, tree.scenario_id)
    write_json_atomic(path, rollout_artifact(tree, config, seed, backend))
    return path


def read_rollout_artifact(path: str | Path) -> tuple[RolloutTree, dict[str, Any]]:
    """Returns the tree plus the artifact metadata (config, seed, backend)."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    tree = RolloutTree.from_dict(doc)
    meta = {
        "config": doc.get("config", {}),
        "seed": doc.get("seed"),
        "backend": doc.get("backend", {}),
        "events_digest": doc.get("events_digest"),
    }
    return tree, meta


def read_rollout_dir(out_dir: str | Path) -> list[tuple[RolloutTree, dict[str, Any]]]:
    """All artifacts in a directory, ordered by scenario id."""
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        raise FileNotFoundError(f"no rollout directory at {out_dir}")
    items = []
    for path in sorted(out_dir.glob("*.json")):
        items.append(read_rollout_artifact(path))
    return items
