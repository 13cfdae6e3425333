from .clients import ParentClient, WatchClient, make_connectivity
from .profiles import FamilyProfile, default_population, profiles_from_json, profiles_to_json
from .study import (
    StudyRunReport,
    calm_trigger_precision,
    check_policy_invariants,
    run_study,
)
from .trace import GroundTruthState, gen_trace

__all__ = [
    "ParentClient",
    "WatchClient",
    "make_connectivity",
    "FamilyProfile",
    "default_population",
    "profiles_from_json",
    "profiles_to_json",
    "StudyRunReport",
    "calm_trigger_precision",
    "check_policy_invariants",
    "run_study",
    "GroundTruthState",
    "gen_trace",
]
