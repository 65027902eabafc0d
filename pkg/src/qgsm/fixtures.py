"""Worked examples replayed against the library.

Each fixture rebuilds a printed example with the simulator or the sifting
code and compares the result to the printed value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .auth_gsm import AuthResponse, RandChallenge, SecretKey
from .proto_qmem.memory import (
    X_CODE,
    Z_CODE,
    AcceptPolicy,
    AucLedger,
    MemVerdict,
    sift_and_decide,
)
from .proto_tri.rounds import RoundClass, classify_round, null_adjust
from .qstate import (
    Axis,
    NamedState,
    Sign,
    StateVector,
    from_amplitudes,
    make_named_state,
    measure_forced,
    product_state,
    states_equivalent,
)
from .runtime import BasisReport, WindowRequest

X, Z = Axis.X, Axis.Z
PLUS, MINUS = Sign.PLUS, Sign.MINUS
SIM1, SIM2, AUC = 0, 1, 2
LABELS = ("SIM1", "SIM2", "AUC")


@dataclass(frozen=True)
class FixtureResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}" + (f": {self.detail}" if self.detail else "")


def _ket(text: str) -> StateVector:
    return product_state(text, LABELS)


def _bell_times(sign: int, third: str) -> StateVector:
    """(|00> + sign|11>) on SIM1,SIM2 tensored with a third-qubit ket."""
    pair = np.array([1, 0, 0, sign], dtype=complex)
    single = {"+": [1, 1], "-": [1, -1], "0": [1, 0]}[third]
    return from_amplitudes(np.kron(pair, np.array(single, dtype=complex)), LABELS)


def _replay(start: StateVector, steps, expected) -> tuple[bool, str]:
    state = start
    for i, ((qubit, axis, sign), want) in enumerate(zip(steps, expected), 1):
        state = measure_forced(state, qubit, axis, sign)
        if want is not None and not states_equivalent(state, want):
            return False, f"step {i} post-state differs"
    return True, ""


def ghz() -> StateVector:
    return make_named_state(NamedState.GHZ3, LABELS)


def w_state() -> StateVector:
    return make_named_state(NamedState.W_PAPER, LABELS)


def ghz_x_then_z_replay() -> FixtureResult:
    """AUC X+, SIM1 Z+, SIM2 Z+ on GHZ."""
    ok, why = _replay(
        ghz(),
        [(AUC, X, PLUS), (SIM1, Z, PLUS), (SIM2, Z, PLUS)],
        [_bell_times(1, "+"), _ket("00+"), _ket("00+")],
    )
    return FixtureResult("ghz_auc_x_then_sims_z", ok, why)


def ghz_z_then_x_replay() -> FixtureResult:
    """AUC Z+, SIM2 Z+, SIM1 X+ on GHZ."""
    ok, why = _replay(
        ghz(),
        [(AUC, Z, PLUS), (SIM2, Z, PLUS), (SIM1, X, PLUS)],
        [_ket("000"), _ket("000"), _ket("+00")],
    )
    return FixtureResult("ghz_channel_a_round", ok, why)


def ghz_null_replay() -> FixtureResult:
    """Null round on GHZ: AUC X-, SIM1 X-, SIM2 X+."""
    ok, why = _replay(
        ghz(),
        [(AUC, X, MINUS), (SIM1, X, MINUS), (SIM2, X, PLUS)],
        [_bell_times(-1, "-"), _ket("-+-"), _ket("-+-")],
    )
    return FixtureResult("ghz_null_round", ok, why)


def w_null_replay() -> FixtureResult:
    """Null round on the W-type state: AUC X-, SIM1 X-, SIM2 X+."""
    anti = from_amplitudes(np.kron([0, 1, -1, 0], [1, -1]).astype(complex), LABELS)
    ok, why = _replay(
        w_state(),
        [(AUC, X, MINUS), (SIM1, X, MINUS), (SIM2, X, PLUS)],
        [anti, _ket("-+-"), _ket("-+-")],
    )
    return FixtureResult("w_null_round", ok, why)


# The twenty-emission GHZ run, rows 20..1: (row, SIM1 axis, SIM1 bit, AUC axis, AUC bit, SIM2 axis, SIM2 bit)
TWENTY_ROUND_ROWS = (
    (20, X, 1, X, 1, Z, 0),
    (19, Z, 0, X, 1, Z, 0),
    (18, X, 0, Z, 1, X, 1),
    (17, X, 0, X, 1, X, 1),
    (16, Z, 1, X, 0, Z, 1),
    (15, X, 1, Z, 1, X, 1),
    (14, X, 0, Z, 0, X, 0),
    (13, Z, 0, X, 0, Z, 0),
    (12, X, 0, Z, 1, Z, 1),
    (11, Z, 1, X, 0, X, 0),
    (10, X, 1, Z, 0, X, 1),
    (9, Z, 1, X, 1, X, 1),
    (8, Z, 0, Z, 0, X, 1),
    (7, Z, 1, Z, 1, Z, 1),
    (6, X, 1, X, 0, X, 1),
    (5, Z, 0, Z, 0, Z, 0),
    (4, Z, 0, X, 0, X, 0),
    (3, X, 0, X, 0, Z, 0),
    (2, Z, 1, X, 0, Z, 0),
    (1, X, 1, X, 1, X, 0),
)
TWENTY_ROUND_CLASSES = {
    RoundClass.NULL_GRAY: (17, 6, 1),
    RoundClass.BOTH_GREEN: (7, 5),
    RoundClass.CHAN_A_BLUE: (8,),
    RoundClass.CHAN_B_YELLOW: (12,),
}


def twenty_round_classification() -> FixtureResult:
    """Every row lands in its printed colour and usable rows carry agreeing bits."""
    got: dict[RoundClass, list[int]] = {}
    problems = []
    for row, a1, b1, a3, b3, a2, b2 in TWENTY_ROUND_ROWS:
        cls = classify_round((a1, a2, a3))
        got.setdefault(cls, []).append(row)
        if cls is RoundClass.NULL_GRAY:
            b1, b2 = null_adjust(b3, b1), null_adjust(b3, b2)
        if cls.feeds_a and b1 != b3:
            problems.append(f"row {row} channel A bits differ")
        if cls.feeds_b and b2 != b3:
            problems.append(f"row {row} channel B bits differ")
    for cls, rows in TWENTY_ROUND_CLASSES.items():
        if tuple(got.get(cls, ())) != rows:
            problems.append(f"{cls.value}: expected rows {rows}, got {tuple(got.get(cls, ()))}")
    red = 20 - sum(len(r) for r in TWENTY_ROUND_CLASSES.values())
    if len(got.get(RoundClass.DISCARD_RED, ())) != red:
        problems.append("red row count differs")
    return FixtureResult("twenty_round_classes", not problems, "; ".join(problems))


A3_EXAMPLE = {"ki": "0110", "rand": "10110", "qk1": "01011", "qk2": "10110101"}
A3_EXPECTED = {"res": 28, "qxres1": 33, "qxres2": 203}


def a3_sum(key: SecretKey, rand: RandChallenge) -> AuthResponse:
    """The summation A3 of the worked example."""
    return AuthResponse((key.value + rand.value) & 0xFFFFFFFF)


def a3_example() -> FixtureResult:
    rand = RandChallenge(int(A3_EXAMPLE["rand"], 2))
    ki = SecretKey.from_bits(A3_EXAMPLE["ki"])
    res = a3_sum(ki, rand).value
    q1 = a3_sum(SecretKey.from_bits(A3_EXAMPLE["qk1"]), rand).value
    q2 = a3_sum(SecretKey.from_bits(A3_EXAMPLE["qk2"]), rand).value
    got = {"res": res, "qxres1": q1, "qxres2": q2}
    ok = got == A3_EXPECTED and q1 != q2
    return FixtureResult("a3_sum_example", ok, "" if ok else f"got {got}")


# Memory challenge example, positions n+1..n+10 with n = 50.  The last two AUC bases are not
# printed; they follow from the printed results (|->, |+>).
MEMORY_EXAMPLE_N = 50
MEMORY_EXAMPLE_AUC_AXES = (Z, X, Z, Z, X, Z, X, Z, X, X)
MEMORY_EXAMPLE_AUC_BITS = (1, 1, 0, 1, 1, 1, 1, 0, 1, 0)
MEMORY_EXAMPLE_SIM_AXES = (Z, Z, Z, X, Z, Z, X, X, Z, Z)
MEMORY_EXAMPLE_SIM_BITS = (1, 1, 0, 1, 0, 1, 1, 1, 1, 0)
MEMORY_EXAMPLE_KEY = "1011"


def memory_example_ledger(N: int = 60) -> AucLedger:
    """A ledger with the fixture values at positions 51..60, zeros elsewhere."""
    axes = np.zeros(N, dtype=np.uint8)
    bits = np.zeros(N, dtype=np.uint8)
    sl = slice(MEMORY_EXAMPLE_N, MEMORY_EXAMPLE_N + 10)
    axes[sl] = [X_CODE if a is X else Z_CODE for a in MEMORY_EXAMPLE_AUC_AXES]
    bits[sl] = MEMORY_EXAMPLE_AUC_BITS
    return AucLedger(axes, bits)


def memory_example_report() -> BasisReport:
    request = WindowRequest(MEMORY_EXAMPLE_N, 10)
    return BasisReport(tuple(request.positions), MEMORY_EXAMPLE_SIM_AXES, MEMORY_EXAMPLE_SIM_BITS)


def memory_example_fixture() -> FixtureResult:
    decision = sift_and_decide(memory_example_ledger(), memory_example_report(), AcceptPolicy.threshold(4))
    ok = decision.key == MEMORY_EXAMPLE_KEY and decision.verdict is MemVerdict.ACCEPT
    detail = "" if ok else f"key {decision.key!r}, verdict {decision.verdict.value}"
    return FixtureResult("memory_window_key_1011", ok, detail)


FIXTURES: dict[str, Callable[[], FixtureResult]] = {
    "ghz_x_then_z": ghz_x_then_z_replay,
    "ghz_channel_a": ghz_z_then_x_replay,
    "ghz_null": ghz_null_replay,
    "w_null": w_null_replay,
    "twenty_rounds": twenty_round_classification,
    "a3": a3_example,
    "memory_window": memory_example_fixture,
}


def run_fixtures() -> list[FixtureResult]:
    return [fn() for fn in FIXTURES.values()]
