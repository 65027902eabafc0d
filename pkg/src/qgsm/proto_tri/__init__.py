"""Three-particle entanglement protocol for cloned-SIM detection."""

from .auth import (
    DEFAULT_MIN_KEY_BITS,
    AuthCenter,
    CloneOutcome,
    CloneVerdict,
    QuantumAuthResult,
    SimCredentials,
    detect_clone,
    login,
    quantum_authenticate,
)
from .cnot import EveReport, eve_cnot_session, mutual_information
from .e91 import E91Result, run_e91_reference
from .rounds import (
    ChannelKeys,
    RoundClass,
    RoundRecord,
    SimKey,
    classify_round,
    null_adjust,
    reconcile_state_correlations,
)
from .scenarios import DEFAULT_CONFIG, ScenarioKind, ScenarioStats, TrialOutcome, run_scenario, run_trial
from .session import ConfigError, SessionResult, TriConfig, forward_key, run_session
from .table import read_round_table, write_round_table

__all__ = [
    "AuthCenter",
    "ChannelKeys",
    "CloneOutcome",
    "CloneVerdict",
    "ConfigError",
    "DEFAULT_CONFIG",
    "DEFAULT_MIN_KEY_BITS",
    "E91Result",
    "EveReport",
    "QuantumAuthResult",
    "RoundClass",
    "RoundRecord",
    "ScenarioKind",
    "ScenarioStats",
    "SessionResult",
    "SimCredentials",
    "SimKey",
    "TriConfig",
    "TrialOutcome",
    "classify_round",
    "detect_clone",
    "eve_cnot_session",
    "forward_key",
    "login",
    "mutual_information",
    "null_adjust",
    "quantum_authenticate",
    "read_round_table",
    "reconcile_state_correlations",
    "run_e91_reference",
    "run_scenario",
    "run_session",
    "run_trial",
    "write_round_table",
]
