"""Provisioned Bell-pair memory, windowed challenges and the acceptance decision.

Storage is columnar: per position an axis code (0 = Z, 1 = X), a bit, and for
the bank a consumed flag.  Each stored SIM qubit is the eigenstate the AUC's
measurement steered it into, so a SIM measurement along the stored axis
returns the stored bit and along the other axis a fair coin.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..qstate import Axis, Sign, StateVector, eigenstate
from ..runtime import (
    BasisReport,
    Decision,
    ImsiRequest,
    PartyId,
    RngStream,
    Session,
    Verdict,
    WindowRequest,
    classical_send,
)
from .combinatorics import q_contract

Z_CODE, X_CODE = 0, 1
AXIS_OF_CODE = (Axis.Z, Axis.X)
CODE_OF_AXIS = {Axis.Z: Z_CODE, Axis.X: X_CODE}


class WindowError(ValueError):
    """Window outside the bank."""


class ReuseError(WindowError):
    """Window touches cells that were already measured."""


class ContractMode(str, Enum):
    IID_RANDOM = "IidRandom"
    FIXED_COUNT = "FixedCount"


@dataclass(frozen=True)
class BasisContract:
    """How a party picks axes inside one window."""

    mode: ContractMode = ContractMode.IID_RANDOM
    q_target: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", ContractMode(self.mode))
        if self.mode is ContractMode.FIXED_COUNT and (self.q_target is None or self.q_target < 0):
            raise ValueError("FixedCount needs q_target >= 0")

    @classmethod
    def iid(cls) -> "BasisContract":
        return cls()

    @classmethod
    def fixed(cls, q: int) -> "BasisContract":
        return cls(ContractMode.FIXED_COUNT, q)

    def check(self, m: int) -> None:
        if self.mode is ContractMode.FIXED_COUNT and self.q_target > m:
            raise ValueError(f"FixedCount q={self.q_target} exceeds window length {m}")

    def draw(self, gen: np.random.Generator, rows: int, m: int) -> np.ndarray:
        """Axis codes, shape (rows, m); FixedCount puts exactly q X picks per row."""
        self.check(m)
        if self.mode is ContractMode.IID_RANDOM:
            return gen.integers(0, 2, size=(rows, m), dtype=np.uint8)
        ranks = gen.random((rows, m)).argsort(axis=1).argsort(axis=1)
        return (ranks < self.q_target).astype(np.uint8)


@dataclass(frozen=True)
class LedgerEntry:
    position: int
    axis: Axis
    bit: int


@dataclass
class AucLedger:
    """AUC's classical record of its provisioning measurements, positions 1..N."""

    axes: np.ndarray
    bits: np.ndarray
    seed: int = 0

    @property
    def N(self) -> int:
        return int(self.axes.shape[0])

    def entries(self):
        for i in range(self.N):
            yield LedgerEntry(i + 1, AXIS_OF_CODE[self.axes[i]], int(self.bits[i]))

    def entry(self, position: int) -> LedgerEntry:
        i = _index(position, self.N)
        return LedgerEntry(position, AXIS_OF_CODE[self.axes[i]], int(self.bits[i]))


@dataclass
class QuantumMemoryBank:
    """SIM-side stored qubits in local-collapse form."""

    axes: np.ndarray
    bits: np.ndarray
    consumed: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        if self.consumed is None:
            self.consumed = np.zeros(self.axes.shape[0], dtype=bool)

    @property
    def capacity(self) -> int:
        return int(self.axes.shape[0])

    @property
    def remaining(self) -> int:
        return self.capacity - int(self.consumed.sum())

    def copy(self) -> "QuantumMemoryBank":
        return QuantumMemoryBank(self.axes.copy(), self.bits.copy(), self.consumed.copy())

    def cell_state(self, position: int) -> StateVector:
        i = _index(position, self.capacity)
        if self.consumed[i]:
            raise ReuseError(f"position {position} has already been measured")
        axis = AXIS_OF_CODE[self.axes[i]]
        return eigenstate(axis, Sign.from_bit(int(self.bits[i])), label=position)

    def check_window(self, request: WindowRequest) -> None:
        check_window_bounds(request.n, request.m, self.capacity)
        lo, hi = request.n, request.n + request.m
        if self.consumed[lo:hi].any():
            used = [lo + 1 + int(i) for i in np.flatnonzero(self.consumed[lo:hi])]
            raise ReuseError(f"window {lo + 1}..{hi} overlaps consumed positions {used[:5]}")

    def measure(
        self, index: np.ndarray, axes: np.ndarray, gen: np.random.Generator, p_flip: float = 0.0
    ) -> np.ndarray:
        """Measure cells at 0-based ``index`` along ``axes`` and consume them."""
        flat = index.ravel()
        if self.consumed[flat].any():
            raise ReuseError("measurement requested on consumed cells")
        if np.unique(flat).size != flat.size:
            raise ReuseError("a cell appears twice in one measurement batch")
        same = self.axes[index] == axes
        coin = gen.integers(0, 2, size=index.shape, dtype=np.uint8)
        bits = np.where(same, self.bits[index], coin).astype(np.uint8)
        if p_flip > 0.0:
            bits ^= (gen.random(index.shape) < p_flip).astype(np.uint8)
        self.consumed[flat] = True
        return bits


def _index(position: int, n: int) -> int:
    if not 1 <= position <= n:
        raise WindowError(f"position {position} outside 1..{n}")
    return position - 1


def check_window_bounds(n: int, m: int, capacity: int) -> None:
    if m < 1:
        raise WindowError("window length m must be >= 1")
    if n < 0 or n + m > capacity:
        raise WindowError(f"window {n + 1}..{n + m} outside bank 1..{capacity}")


def provision(
    N: int, seed: int, auc_contract: BasisContract | None = None, block: int | None = None
) -> tuple[AucLedger, QuantumMemoryBank]:
    """Create N Bell pairs, measure the AUC legs, store the steered SIM legs.

    By default the AUC picks each axis uniformly.  With ``auc_contract`` and
    ``block`` it applies the contract to consecutive blocks of ``block``
    positions instead (N must be a multiple of ``block``).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    axis_gen = RngStream(seed, PartyId.AUC, "provision.axes").generator
    bit_gen = RngStream(seed, PartyId.AUC, "provision.bits").generator
    if auc_contract is None or (auc_contract.mode is ContractMode.IID_RANDOM and block is None):
        axes = axis_gen.integers(0, 2, size=N, dtype=np.uint8)
    else:
        if block is None or N % block:
            raise ValueError("a per-window AUC contract needs N to be a multiple of block")
        axes = auc_contract.draw(axis_gen, N // block, block).ravel()
    # Each outcome of a Bell-pair measurement is a fair coin on either axis.
    bits = bit_gen.integers(0, 2, size=N, dtype=np.uint8)
    ledger = AucLedger(axes, bits, seed)
    bank = QuantumMemoryBank(axes.copy(), bits.copy())
    return ledger, bank


def sim_measure_window(
    bank: QuantumMemoryBank,
    request: WindowRequest,
    contract: BasisContract,
    rng: RngStream | np.random.Generator,
    p_flip: float = 0.0,
) -> BasisReport:
    """Measure positions n+1..n+m under the contract and report (positions, axes, bits)."""
    gen = rng.generator if isinstance(rng, RngStream) else rng
    bank.check_window(request)
    index = np.arange(request.n, request.n + request.m)
    axes = contract.draw(gen, 1, request.m)[0]
    bits = bank.measure(index, axes, gen, p_flip)
    return BasisReport(
        tuple(range(request.n + 1, request.n + request.m + 1)),
        tuple(AXIS_OF_CODE[a] for a in axes),
        tuple(int(b) for b in bits),
    )


class PolicyKind(str, Enum):
    EXACT_Q = "ExactQ"
    THRESHOLD = "Threshold"
    MODAL_COUNT = "ModalCount"


@dataclass(frozen=True)
class AcceptPolicy:
    """Count requirement on matched-basis positions.

    ``ExactQ(q)`` needs exactly q matches (q defaults to the modal count),
    ``ModalCount`` exactly the modal count, ``Threshold(q_min)`` at least
    q_min matches (default ``m // 2``).
    """

    kind: PolicyKind = PolicyKind.THRESHOLD
    q: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.q is not None and self.q < 0:
            raise ValueError("policy count must be >= 0")

    @classmethod
    def exact_q(cls, q: int | None = None) -> "AcceptPolicy":
        return cls(PolicyKind.EXACT_Q, q)

    @classmethod
    def threshold(cls, q_min: int | None = None) -> "AcceptPolicy":
        return cls(PolicyKind.THRESHOLD, q_min)

    @classmethod
    def modal_count(cls) -> "AcceptPolicy":
        return cls(PolicyKind.MODAL_COUNT)

    def required(self, m: int) -> int:
        if self.kind is PolicyKind.THRESHOLD:
            return m // 2 if self.q is None else self.q
        if self.kind is PolicyKind.EXACT_Q and self.q is not None:
            return self.q
        return q_contract(m)

    def satisfied(self, matched, m: int):
        q = self.required(m)
        return matched >= q if self.kind is PolicyKind.THRESHOLD else matched == q

    def __str__(self) -> str:
        return self.kind.value if self.q is None else f"{self.kind.value}({self.q})"


class MemVerdict(str, Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"
    REJECT_COUNT_MISMATCH = "RejectCountMismatch"


_VERDICTS = (MemVerdict.ACCEPT, MemVerdict.REJECT, MemVerdict.REJECT_COUNT_MISMATCH)


@dataclass(frozen=True)
class MemDecision:
    verdict: MemVerdict
    matched_positions: tuple[int, ...]
    mismatched_bits: int
    qber: float
    key: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "verdict", MemVerdict(self.verdict))
        if not 0.0 <= self.qber <= 1.0:
            raise ValueError("qber must lie in [0, 1]")

    @property
    def accepted(self) -> bool:
        return self.verdict is MemVerdict.ACCEPT


def _verdict_codes(matched, mismatches, policy: AcceptPolicy, m: int, qber_threshold: float):
    """0 = Accept, 1 = Reject (bit errors), 2 = RejectCountMismatch; vectorized."""
    matched = np.asarray(matched)
    mismatches = np.asarray(mismatches)
    # errors/matched <= threshold, kept in integers where possible
    too_noisy = mismatches > np.floor(qber_threshold * matched + 1e-9)
    count_ok = np.asarray(policy.satisfied(matched, m))
    return np.where(too_noisy, 1, np.where(count_ok, 0, 2))


def sift_and_decide(
    ledger: AucLedger,
    report: BasisReport,
    accept_policy: AcceptPolicy = AcceptPolicy(),
    qber_threshold: float = 0.0,
) -> MemDecision:
    """Keep positions where the reported axis equals the AUC's, then decide.

    Bit disagreement beyond ``qber_threshold`` rejects; otherwise the count
    policy decides between Accept and RejectCountMismatch.
    """
    if not report.positions:
        raise ValueError("empty report")
    index = np.asarray(report.positions, dtype=np.int64) - 1
    if index.min() < 0 or index.max() >= ledger.N:
        raise WindowError("report positions outside the ledger")
    sim_axes = np.fromiter((CODE_OF_AXIS[Axis(a)] for a in report.axes), dtype=np.uint8, count=len(index))
    sim_bits = np.asarray(report.bits, dtype=np.uint8)
    match = ledger.axes[index] == sim_axes
    matched_positions = tuple(int(p) for p, ok in zip(report.positions, match) if ok)
    k = len(matched_positions)
    errors = int((ledger.bits[index][match] != sim_bits[match]).sum())
    qber = errors / k if k else 0.0
    code = int(_verdict_codes(k, errors, accept_policy, len(index), qber_threshold))
    key = "".join(str(int(b)) for b in ledger.bits[index][match])
    return MemDecision(_VERDICTS[code], matched_positions, errors, qber, key)


@dataclass(frozen=True)
class ChallengeBatch:
    """Vectorized outcome of many consecutive windows."""

    m: int
    starts: np.ndarray
    matched: np.ndarray
    mismatches: np.ndarray
    codes: np.ndarray
    sim_axes: np.ndarray
    sim_bits: np.ndarray

    def report(self, i: int) -> BasisReport:
        """Window ``i`` as the SIM reported it."""
        n = int(self.starts[i])
        return BasisReport(
            tuple(range(n + 1, n + self.m + 1)),
            tuple(AXIS_OF_CODE[a] for a in self.sim_axes[i]),
            tuple(int(b) for b in self.sim_bits[i]),
        )

    @property
    def trials(self) -> int:
        return int(self.matched.shape[0])

    @property
    def accepted(self) -> np.ndarray:
        return self.codes == 0

    @property
    def qber(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.matched > 0, self.mismatches / np.maximum(self.matched, 1), 0.0)

    def verdict(self, i: int) -> MemVerdict:
        return _VERDICTS[int(self.codes[i])]


def run_challenges(
    ledger: AucLedger,
    bank: QuantumMemoryBank,
    m: int,
    trials: int,
    contract: BasisContract,
    policy: AcceptPolicy,
    rng: RngStream | np.random.Generator,
    start: int = 0,
    p_flip: float = 0.0,
    qber_threshold: float = 0.0,
) -> ChallengeBatch:
    """Serve ``trials`` consecutive windows of length m beginning after position ``start``."""
    gen = rng.generator if isinstance(rng, RngStream) else rng
    if trials < 1:
        raise ValueError("trials must be >= 1")
    check_window_bounds(start, m * trials, bank.capacity)
    index = np.arange(start, start + m * trials).reshape(trials, m)
    if bank.consumed[index].any():
        raise ReuseError("challenge windows overlap consumed positions")
    sim_axes = contract.draw(gen, trials, m)
    sim_bits = bank.measure(index, sim_axes, gen, p_flip)
    match = ledger.axes[index] == sim_axes
    matched = match.sum(axis=1)
    mismatches = (match & (ledger.bits[index] != sim_bits)).sum(axis=1)
    codes = _verdict_codes(matched, mismatches, policy, m, qber_threshold)
    return ChallengeBatch(m, index[:, 0].copy(), matched, mismatches, codes, sim_axes, sim_bits)


def challenge(
    session: Session,
    ledger: AucLedger,
    bank: QuantumMemoryBank,
    request: WindowRequest,
    contract: BasisContract = BasisContract(),
    policy: AcceptPolicy = AcceptPolicy(),
    imsi: str = "432111234567890",
    sim: PartyId = PartyId.SIM1,
    p_flip: float = 0.0,
    qber_threshold: float = 0.0,
) -> MemDecision:
    """One logged login: IMSI, window request, basis report, decision."""
    auc = PartyId.AUC
    classical_send(session, sim, auc, ImsiRequest(imsi))
    classical_send(session, auc, sim, request)
    report = sim_measure_window(bank, request, contract, session.stream(sim, "qmem"), p_flip)
    classical_send(session, sim, auc, report)
    decision = sift_and_decide(ledger, report, policy, qber_threshold)
    verdict = Verdict.ACCEPT if decision.accepted else Verdict.REJECT
    reason = "" if decision.accepted else decision.verdict.value
    classical_send(session, auc, sim, Decision(verdict, reason))
    return decision
