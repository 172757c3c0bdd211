"""Evaluation aggregates and the multi-run stability curve.

Per conversation: the exact average reward, whether every goal was
achieved, and which error categories occurred at least once. Aggregates
are exact rationals recomputable from the per-conversation rows. The
stability curve measures, at each conversation count, the across-run
standard deviation of the running mean reward, then smooths it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .stats import lowess
from .tree import EventKind, RolloutTree

ERROR_CATEGORIES = ("BadApiUse", "IncorrectApiFormat")


@dataclass(frozen=True)
class ConversationResult:
    scenario_id: str
    average_reward: Fraction
    full_success: bool
    errors: tuple[str, ...]  # categories seen at least once, sorted

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "average_reward": str(self.average_reward),
            "full_success": self.full_success,
            "errors": list(self.errors),
        }

    @classmethod
    def from_dict(cls, d) -> ConversationResult:
        return cls(
            scenario_id=d["scenario_id"],
            average_reward=Fraction(d["average_reward"]),
            full_success=d["full_success"],
            errors=tuple(d["errors"]),
        )


def conversation_result(tree: RolloutTree) -> ConversationResult:
    seen = set()
    for node in tree.iter_nodes():
        for e in node.events:
            if e.kind is EventKind.ENV_ERROR and e.error is not None:
                seen.add(e.error.category.value)
    ar = tree.ledger.average_reward
    return ConversationResult(
        scenario_id=tree.scenario_id,
        average_reward=ar,
        full_success=ar == 1,
        errors=tuple(sorted(seen)),
    )


@dataclass(frozen=True)
class EvalResult:
    per_conversation: tuple[ConversationResult, ...]
    avg_reward_mean: Fraction
    success_rate_100: Fraction
    error_rate_by_category: dict[str, Fraction]

    def to_dict(self) -> dict:
        return {
            "per_conversation": [c.to_dict() for c in self.per_conversation],
            "aggregate": {
                "conversations": len(self.per_conversation),
                "avg_reward_mean": str(self.avg_reward_mean),
                "avg_reward_mean_float": float(self.avg_reward_mean),
                "success_rate_100": str(self.success_rate_100),
                "success_rate_100_float": float(self.success_rate_100),
                "error_rate_by_category": {
                    k: float(v) for k, v in self.error_rate_by_category.items()
                },
            },
        }


def evaluate_run(results: Iterable[ConversationResult | RolloutTree]) -> EvalResult:
    rows = [r if isinstance(r, ConversationResult) else conversation_result(r) for r in results]
    if not rows:
        raise ValueError("nothing to evaluate")
    n = len(rows)
    avg = sum((r.average_reward for r in rows), Fraction(0)) / n
    success = Fraction(sum(1 for r in rows if r.full_success), n)
    error_rates = {
        cat: Fraction(sum(1 for r in rows if cat in r.errors), n) for cat in ERROR_CATEGORIES
    }
    return EvalResult(
        per_conversation=tuple(rows),
        avg_reward_mean=avg,
        success_rate_100=success,
        error_rate_by_category=error_rates,
    )


@dataclass(frozen=True)
class StabilityCurve:
    points: tuple[tuple[int, float], ...]  # (conversation count, raw std dev)
    smoothed: tuple[float, ...]
    runs: int

    def to_rows(self) -> list[dict]:
        return [
            {"conversations": n, "std_dev": raw, "smoothed": sm}
            for (n, raw), sm in zip(self.points, self.smoothed)
        ]


def stability_curve(
    per_run_rewards: Sequence[Sequence[float]],
    bandwidth_fraction: float = 0.3,
) -> StabilityCurve:
    """Across-run std dev of the running mean reward, per conversation count.

    All runs must cover the same scenarios in the same order.
    """
    if len(per_run_rewards) < 2:
        raise ValueError("need at least 2 runs")
    lengths = {len(r) for r in per_run_rewards}
    if len(lengths) != 1:
        raise ValueError(f"runs have unequal lengths: {sorted(lengths)}")
    (n,) = lengths
    if n == 0:
        raise ValueError("runs are empty")

    rewards = np.asarray(per_run_rewards, dtype=float)
    counts = np.arange(1, n + 1, dtype=float)
    running_means = np.cumsum(rewards, axis=1) / counts
    stds = running_means.std(axis=0, ddof=0)

    if n == 1:
        return StabilityCurve(
            points=((1, float(stds[0])),), smoothed=(float(stds[0]),), runs=len(per_run_rewards)
        )
    # Widen the smoothing window on short runs so it always holds >= 2 points
    # (2.5 rather than 2.0 dodges int(frac * n) rounding below 2).
    fraction = max(bandwidth_fraction, min(1.0, 2.5 / n))
    smoothed = lowess(np.column_stack([counts, stds]), bandwidth_fraction=fraction)
    points = tuple((int(c), float(s)) for c, s in zip(counts, stds))
    return StabilityCurve(points=points, smoothed=tuple(smoothed), runs=len(per_run_rewards))
