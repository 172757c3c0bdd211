"""Turn-level beam-search simulation and preference-data harvesting for
tool-calling dialogue agents."""

from .extraction import (
    KtoRecord,
    SftRecord,
    extract_kto,
    extract_sft,
    filter_rollouts,
    ideal_path,
)
from .metrics import EvalResult, StabilityCurve, evaluate_run, stability_curve
from .rollout import BeamConfig, average_reward, run_rollout
from .stats import lowess, paired_bootstrap
from .tree import RolloutTree, TerminationReason

__version__ = "0.1.0"

__all__ = [
    "BeamConfig",
    "EvalResult",
    "KtoRecord",
    "RolloutTree",
    "SftRecord",
    "StabilityCurve",
    "TerminationReason",
    "average_reward",
    "evaluate_run",
    "extract_kto",
    "extract_sft",
    "filter_rollouts",
    "ideal_path",
    "lowess",
    "paired_bootstrap",
    "run_rollout",
    "stability_curve",
]
