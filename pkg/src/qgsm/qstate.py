"""Few-qubit state-vector engine.

Amplitudes are stored as plain tuples of Python complex numbers, indexed
big-endian: qubit 0 is the most significant bit of the basis index, so for the
three-party states ``|ijk>`` the order is (SIM1, SIM2, AUC).  At five qubits or
fewer numpy call overhead dominates the arithmetic, so the hot paths
(measurement, CNOT) are written as straight loops.  numpy is only used for the
exact outcome-distribution oracle and the projector matrices.

Bit convention: ``Sign.PLUS`` is the classical bit 0 (``|0>``, ``|+>``,
``|+i>``) and ``Sign.MINUS`` is the bit 1.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Iterable, NamedTuple, Protocol, Sequence

import numpy as np

MAX_QUBITS = 5
NORM_TOL = 1e-12
ZERO_PROB_TOL = 1e-12

_R = 1 / math.sqrt(2)


class Axis(str, Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


class Sign(str, Enum):
    PLUS = "+"
    MINUS = "-"

    @property
    def bit(self) -> int:
        return 0 if self is Sign.PLUS else 1

    @classmethod
    def from_bit(cls, bit: int) -> "Sign":
        return cls.PLUS if bit == 0 else cls.MINUS


_PLUS, _MINUS = Sign.PLUS, Sign.MINUS

class NamedState(str, Enum):
    GHZ3 = "GHZ3"
    W_PAPER = "W_PAPER"
    BELL_PHI_PLUS = "BELL_PHI_PLUS"


class ZeroProbabilityError(ValueError):
    """A forced projection onto an outcome the state cannot produce."""


class UniformSource(Protocol):
    def random(self) -> float: ...


# Eigenvectors (plus, minus) of each Pauli axis.
EIGENVECTORS: dict[Axis, tuple[tuple[complex, complex], tuple[complex, complex]]] = {
    Axis.Z: ((1 + 0j, 0j), (0j, 1 + 0j)),
    Axis.X: ((_R + 0j, _R + 0j), (_R + 0j, -_R + 0j)),
    Axis.Y: ((_R + 0j, 1j * _R), (_R + 0j, -1j * _R)),
}

_KETS = {
    "0": (Axis.Z, Sign.PLUS),
    "1": (Axis.Z, Sign.MINUS),
    "+": (Axis.X, Sign.PLUS),
    "-": (Axis.X, Sign.MINUS),
    "r": (Axis.Y, Sign.PLUS),
    "l": (Axis.Y, Sign.MINUS),
}


@dataclass(frozen=True, slots=True)
class StateVector:
    """Normalized pure state over 1-5 labelled qubits."""

    amplitudes: tuple[complex, ...]
    qubit_labels: tuple[Hashable, ...]

    def __post_init__(self) -> None:
        n = len(self.qubit_labels)
        if not 1 <= n <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in 1..{MAX_QUBITS}, got {n}")
        if len(self.amplitudes) != 1 << n:
            raise ValueError(
                f"expected {1 << n} amplitudes for {n} qubits, got {len(self.amplitudes)}"
            )
        if len(set(self.qubit_labels)) != n:
            raise ValueError(f"qubit labels must be unique: {self.qubit_labels!r}")
        norm = sum(a.real * a.real + a.imag * a.imag for a in self.amplitudes)
        if abs(norm - 1.0) >= NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")

    @property
    def num_qubits(self) -> int:
        return len(self.qubit_labels)

    def index_of(self, label: Hashable) -> int:
        return self.qubit_labels.index(label)

    def as_array(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype=complex)


class _RecordFields(NamedTuple):
    qubit_index: int
    axis: Axis
    outcome_sign: Sign
    classical_bit: int
    sequence_number: int = 0
    label: Hashable = None


class MeasurementRecord(_RecordFields):
    """Immutable outcome of one projective measurement."""

    __slots__ = ()

    def __new__(
        cls,
        qubit_index: int,
        axis: Axis,
        outcome_sign: Sign,
        classical_bit: int,
        sequence_number: int = 0,
        label: Hashable = None,
    ):
        if classical_bit != (0 if outcome_sign is _PLUS else 1):
            raise ValueError("classical_bit must be 0 for PLUS and 1 for MINUS")
        return tuple.__new__(cls, (qubit_index, axis, outcome_sign, classical_bit, sequence_number, label))


def _normalized(amps: Iterable[complex]) -> tuple[complex, ...]:
    amps = tuple(complex(a) for a in amps)
    norm = math.sqrt(sum(a.real * a.real + a.imag * a.imag for a in amps))
    if norm < ZERO_PROB_TOL:
        raise ValueError("cannot normalize the zero vector")
    return tuple(a / norm for a in amps)


def from_amplitudes(amplitudes: Iterable[complex], labels: Sequence[Hashable]) -> StateVector:
    """Build a state from unnormalized amplitudes."""
    return StateVector(_normalized(amplitudes), tuple(labels))


def make_named_state(kind: NamedState | str, labels: Sequence[Hashable]) -> StateVector:
    return _named_state(NamedState(kind), tuple(labels))


# States are immutable; sharing one object per (kind, labels) lets repeated
# emissions hit the measurement branch cache.
@functools.lru_cache(maxsize=64)
def _named_state(kind: NamedState, labels: tuple) -> StateVector:
    arity = 2 if kind is NamedState.BELL_PHI_PLUS else 3
    if len(labels) != arity:
        raise ValueError(f"{kind.value} needs {arity} labels, got {len(labels)}")
    amps = [0j] * (1 << arity)
    if kind is NamedState.GHZ3:
        amps[0b000] = amps[0b111] = _R + 0j
    elif kind is NamedState.W_PAPER:
        amps[0b010] = amps[0b101] = _R + 0j
    else:
        amps[0b00] = amps[0b11] = _R + 0j
    return StateVector(tuple(amps), labels)


def product_state(kets: str, labels: Sequence[Hashable] | None = None) -> StateVector:
    """Tensor product of single-qubit eigenstates, e.g. ``product_state("+00")``.

    Letters: ``0 1`` (Z), ``+ -`` (X), ``r l`` (Y).
    """
    if labels is None:
        labels = tuple(range(len(kets)))
    amps: list[complex] = [1 + 0j]
    for ch in kets:
        axis, sign = _KETS[ch]
        vec = EIGENVECTORS[axis][0 if sign is Sign.PLUS else 1]
        amps = [a * v for a in amps for v in vec]
    return StateVector(tuple(amps), tuple(labels))


def eigenstate(axis: Axis, sign: Sign, label: Hashable = 0) -> StateVector:
    vec = EIGENVECTORS[axis][0 if sign is Sign.PLUS else 1]
    return StateVector(vec, (label,))


def projector(axis: Axis, sign: Sign) -> np.ndarray:
    """``|S_{axis;sign}><S_{axis;sign}|`` as a 2x2 complex matrix."""
    vec = np.array(EIGENVECTORS[Axis(axis)][0 if Sign(sign) is Sign.PLUS else 1])
    return np.outer(vec, vec.conj())


_CONJ_EIGENVECTORS = {
    axis: tuple(tuple(c.conjugate() for c in vec) for vec in vecs)
    for axis, vecs in EIGENVECTORS.items()
}


@functools.lru_cache(maxsize=None)
def _pairs(n: int, qubit: int) -> tuple[tuple[int, int], ...]:
    mask = 1 << (n - 1 - qubit)
    return tuple((i, i | mask) for i in range(1 << n) if not i & mask)


def _split(amps: tuple[complex, ...], n: int, qubit: int, axis: Axis):
    """Components of the state along the plus/minus eigenvectors of ``qubit``.

    Returns ``(pairs, c_plus, c_minus)`` where ``pairs`` lists the index pairs
    (bit=0, bit=1) and ``c_*`` the reduced amplitudes ``<v|_q psi``.
    """
    (p0, p1), (m0, m1) = _CONJ_EIGENVECTORS[axis]
    pairs = _pairs(n, qubit)
    c_plus = [p0 * amps[i] + p1 * amps[j] for i, j in pairs]
    c_minus = [m0 * amps[i] + m1 * amps[j] for i, j in pairs]
    return pairs, c_plus, c_minus


def _weight(cs: list[complex]) -> float:
    return sum(c.real * c.real + c.imag * c.imag for c in cs)


def _collapse(state: StateVector, qubit: int, axis: Axis, sign: Sign, pairs, cs, weight):
    vec = EIGENVECTORS[axis][0 if sign is Sign.PLUS else 1]
    scale = 1 / math.sqrt(weight)
    out = [0j] * len(state.amplitudes)
    v0, v1 = vec[0] * scale, vec[1] * scale
    for (i, j), c in zip(pairs, cs):
        out[i] = v0 * c
        out[j] = v1 * c
    return StateVector(tuple(out), state.qubit_labels)


def _check_qubit(state: StateVector, qubit: int) -> None:
    if not 0 <= qubit < len(state.qubit_labels):
        raise IndexError(f"qubit {qubit} out of range for {state.num_qubits}-qubit state")


def outcome_probability(state: StateVector, qubit: int, axis: Axis, sign: Sign) -> float:
    _check_qubit(state, qubit)
    _, c_plus, c_minus = _split(state.amplitudes, state.num_qubits, qubit, Axis(axis))
    return _weight(c_plus if Sign(sign) is Sign.PLUS else c_minus)


# Post-measurement branches keyed by (state object, qubit, axis).  Each entry
# holds the state itself, so its id cannot be recycled while cached.  Protocol
# rounds reuse one source state object and walk the same few branches.
_BRANCHES: dict = {}
_BRANCHES_MAX = 4096


def _branches(state: StateVector, qubit: int, axis: Axis):
    key = (id(state), qubit, axis)
    hit = _BRANCHES.get(key)
    if hit is None:
        pairs, c_plus, c_minus = _split(state.amplitudes, len(state.qubit_labels), qubit, axis)
        w_plus = _weight(c_plus)
        w_minus = _weight(c_minus)
        # A certain outcome leaves the state as it is; reuse it rather than a
        # re-rounded copy.
        if w_minus == 0:
            post_plus, post_minus = state, None
        elif w_plus == 0:
            post_plus, post_minus = None, state
        else:
            post_plus = _collapse(state, qubit, axis, Sign.PLUS, pairs, c_plus, w_plus)
            post_minus = _collapse(state, qubit, axis, Sign.MINUS, pairs, c_minus, w_minus)
        if len(_BRANCHES) >= _BRANCHES_MAX:
            _BRANCHES.clear()
        hit = _BRANCHES[key] = (w_plus, w_minus, post_plus, post_minus, state)
    return hit


def measure_qubit(
    state: StateVector,
    qubit_index: int,
    axis: Axis,
    rng: UniformSource,
    sequence_number: int = 0,
) -> tuple[MeasurementRecord, StateVector]:
    """Projective measurement of one qubit, outcome drawn by the Born rule."""
    if not 0 <= qubit_index < len(state.qubit_labels):
        _check_qubit(state, qubit_index)
    if type(axis) is not Axis:
        axis = Axis(axis)
    w_plus, w_minus, post_plus, post_minus, _ = _branches(state, qubit_index, axis)
    # Both weights are kept rather than taking 1 - w_plus so that a certain
    # outcome never picks the other branch through rounding.
    if rng.random() * (w_plus + w_minus) < w_plus:
        sign, bit, post = _PLUS, 0, post_plus
    else:
        sign, bit, post = _MINUS, 1, post_minus
    record = tuple.__new__(
        MeasurementRecord,
        (qubit_index, axis, sign, bit, sequence_number, state.qubit_labels[qubit_index]),
    )
    return record, post


def measure_forced(state: StateVector, qubit_index: int, axis: Axis, sign: Sign) -> StateVector:
    """Project onto a chosen outcome and renormalize."""
    _check_qubit(state, qubit_index)
    axis, sign = Axis(axis), Sign(sign)
    pairs, c_plus, c_minus = _split(state.amplitudes, state.num_qubits, qubit_index, axis)
    cs = c_plus if sign is Sign.PLUS else c_minus
    w = _weight(cs)
    if w <= ZERO_PROB_TOL:
        raise ZeroProbabilityError(
            f"outcome {axis.value}{sign.value} on qubit {qubit_index} "
            f"({state.qubit_labels[qubit_index]!r}) has probability {w:.3g}"
        )
    return _collapse(state, qubit_index, axis, sign, pairs, cs, w)


def outcome_distribution(
    state: StateVector, assignments: Sequence[tuple[int, Axis]]
) -> dict[tuple[int, ...], float]:
    """Exact joint outcome probabilities for simultaneous measurements.

    Keys are bit tuples ordered like ``assignments``; unassigned qubits are
    marginalized.  Every one of the ``2**k`` outcomes appears as a key.
    """
    qubits = [q for q, _ in assignments]
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubit in assignments: {qubits}")
    n = state.num_qubits
    for q in qubits:
        _check_qubit(state, q)
    psi = state.as_array().reshape((2,) * n)
    for q, axis in assignments:
        plus, minus = EIGENVECTORS[Axis(axis)]
        change = np.array([plus, minus]).conj()
        psi = np.moveaxis(np.tensordot(change, psi, axes=([1], [q])), 0, q)
    probs = np.abs(psi) ** 2
    rest = tuple(q for q in range(n) if q not in qubits)
    probs = probs.sum(axis=rest) if rest else probs
    # Remaining axes are in ascending qubit order; reorder to assignment order.
    ascending = sorted(qubits)
    probs = np.transpose(probs, [ascending.index(q) for q in qubits])
    return {
        bits: float(probs[bits]) for bits in itertools.product((0, 1), repeat=len(qubits))
    }


def attach_ancilla(state: StateVector, initial: int = 0, label: Hashable = "ANCILLA") -> StateVector:
    """Append a fresh qubit in ``|initial>`` as the last (least significant) qubit."""
    if state.num_qubits + 1 > MAX_QUBITS:
        raise ValueError(f"attaching an ancilla would exceed {MAX_QUBITS} qubits")
    if initial not in (0, 1):
        raise ValueError("ancilla must start in |0> or |1>")
    zero = 0j
    amps: list[complex] = []
    for a in state.amplitudes:
        amps.extend((a, zero) if initial == 0 else (zero, a))
    return StateVector(tuple(amps), state.qubit_labels + (label,))


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    _check_qubit(state, control)
    _check_qubit(state, target)
    if control == target:
        raise ValueError("control and target must differ")
    n = state.num_qubits
    cmask = 1 << (n - 1 - control)
    tmask = 1 << (n - 1 - target)
    amps = state.amplitudes
    out = [amps[i ^ tmask] if i & cmask else amps[i] for i in range(1 << n)]
    return StateVector(tuple(out), state.qubit_labels)


def states_equivalent(a: StateVector, b: StateVector, atol: float = 1e-10) -> bool:
    """Equality up to normalization and global phase."""
    if len(a.amplitudes) != len(b.amplitudes):
        return False
    overlap = sum(x.conjugate() * y for x, y in zip(a.amplitudes, b.amplitudes))
    return abs(abs(overlap) - 1.0) < atol


def z_correlation(state: StateVector, q1: int, q2: int) -> float:
    """``<Z_q1 Z_q2>``: +1 for perfectly equal Z bits, -1 for always opposite."""
    dist = outcome_distribution(state, [(q1, Axis.Z), (q2, Axis.Z)])
    return sum(p if a == b else -p for (a, b), p in dist.items())
