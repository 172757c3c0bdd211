"""Tool-calling simulation environment: APIs, databases, serving, matching."""

from .database import DomainDatabase, ScenarioInconsistencyError, clean_database
from .invocation import looks_like_call, validate_invocation
from .matching import api_domain, match_goal
from .registry import ApiParameter, ApiRegistry, ApiSpec, default_registry, load_registry
from .scenario import (
    ScenarioEnv,
    ScenarioLoadError,
    iter_scenario_records,
    load_scenario,
    read_scenario_file,
    scenario_env_to_record,
    write_scenario_file,
)
from .serving import BOOK_UNIQUE_ID_PARAMETER, serve_booking, serve_search
from .types import (
    ApiInvocation,
    BookingResult,
    EnvError,
    ErrorCategory,
    GoalApiCall,
    canonical_args,
    canonical_value,
    mapping_subset,
)

__all__ = [
    "ApiInvocation",
    "ApiParameter",
    "ApiRegistry",
    "ApiSpec",
    "BOOK_UNIQUE_ID_PARAMETER",
    "BookingResult",
    "DomainDatabase",
    "EnvError",
    "ErrorCategory",
    "GoalApiCall",
    "ScenarioEnv",
    "ScenarioInconsistencyError",
    "ScenarioLoadError",
    "api_domain",
    "canonical_args",
    "canonical_value",
    "clean_database",
    "default_registry",
    "iter_scenario_records",
    "load_registry",
    "load_scenario",
    "looks_like_call",
    "mapping_subset",
    "match_goal",
    "read_scenario_file",
    "scenario_env_to_record",
    "serve_booking",
    "serve_search",
    "validate_invocation",
    "write_scenario_file",
]
