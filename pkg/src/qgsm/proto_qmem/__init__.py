"""Quantum-memory SIM protocol: stored Bell halves challenged by windows."""

from .attacks import CloneModel, clone_attack
from .combinatorics import (
    MAX_EXACT_M,
    fixed_count_matched,
    fixed_count_pmf,
    match_probability,
    matched_count_pmf,
    q_contract,
)
from .guard import DepletionGuard, GuardStatus
from .io import (
    CHALLENGE_COLUMNS,
    challenge_rows,
    load_snapshot,
    save_snapshot,
    snapshot_dict,
    snapshot_from_dict,
    write_challenge_csv,
)
from .memory import (
    AcceptPolicy,
    AucLedger,
    BasisContract,
    ChallengeBatch,
    ContractMode,
    LedgerEntry,
    MemDecision,
    MemVerdict,
    PolicyKind,
    QuantumMemoryBank,
    ReuseError,
    WindowError,
    challenge,
    provision,
    run_challenges,
    sift_and_decide,
    sim_measure_window,
)
from .noise import NoiseModel, noise_and_qber

__all__ = [
    "AcceptPolicy",
    "AucLedger",
    "BasisContract",
    "CHALLENGE_COLUMNS",
    "ChallengeBatch",
    "CloneModel",
    "ContractMode",
    "DepletionGuard",
    "GuardStatus",
    "LedgerEntry",
    "MAX_EXACT_M",
    "MemDecision",
    "MemVerdict",
    "NoiseModel",
    "PolicyKind",
    "QuantumMemoryBank",
    "ReuseError",
    "WindowError",
    "challenge",
    "challenge_rows",
    "clone_attack",
    "fixed_count_matched",
    "fixed_count_pmf",
    "load_snapshot",
    "match_probability",
    "matched_count_pmf",
    "noise_and_qber",
    "provision",
    "q_contract",
    "run_challenges",
    "save_snapshot",
    "sift_and_decide",
    "sim_measure_window",
    "snapshot_dict",
    "snapshot_from_dict",
    "write_challenge_csv",
]
