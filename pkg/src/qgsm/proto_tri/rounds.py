"""Per-round sifting rules of the three-party protocol."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from ..qstate import Axis, NamedState, make_named_state, z_correlation

X, Z = Axis.X, Axis.Z


class RoundClass(str, Enum):
    DISCARD_RED = "DiscardRed"
    CHAN_A_BLUE = "ChanA_Blue"
    CHAN_B_YELLOW = "ChanB_Yellow"
    BOTH_GREEN = "BothGreen"
    NULL_GRAY = "NullGray"

    @property
    def feeds_a(self) -> bool:
        return self in _FEEDS_A

    @property
    def feeds_b(self) -> bool:
        return self in _FEEDS_B

    @property
    def single_channel(self) -> bool:
        return self in (RoundClass.CHAN_A_BLUE, RoundClass.CHAN_B_YELLOW)


_FEEDS_A = frozenset({RoundClass.CHAN_A_BLUE, RoundClass.BOTH_GREEN, RoundClass.NULL_GRAY})
_FEEDS_B = frozenset({RoundClass.CHAN_B_YELLOW, RoundClass.BOTH_GREEN, RoundClass.NULL_GRAY})

_TABLE = {
    (Z, Z, Z): RoundClass.BOTH_GREEN,
    (X, X, X): RoundClass.NULL_GRAY,
    (Z, X, Z): RoundClass.CHAN_A_BLUE,
    (X, Z, Z): RoundClass.CHAN_B_YELLOW,
}


def classify_round(axes: tuple[Axis, Axis, Axis]) -> RoundClass:
    """Classify a basis triple ordered (SIM1, SIM2, AUC).

    Single-channel X matches are discarded: on the shared states two-qubit X
    marginals are uncorrelated, so only all-X rounds (rescued by the Null
    message) contribute X outcomes.
    """
    hit = _TABLE.get(axes) if type(axes) is tuple else None
    if hit is not None:
        return hit
    axes = tuple(axes)
    if len(axes) != 3:
        raise ValueError(f"expected a (SIM1, SIM2, AUC) triple, got {axes!r}")
    for a in axes:
        if a not in (X, Z):
            raise ValueError(f"protocol rounds only use X or Z, got {a!r}")
    return _TABLE.get(axes, RoundClass.DISCARD_RED)


def null_adjust(auc_bit: int, sim_bit: int) -> int:
    """Bit a SIM registers after a Null message: flip to the AUC's X outcome."""
    return sim_bit ^ 1 if sim_bit != auc_bit else sim_bit


def reconcile_state_correlations(kind: NamedState | str, literal: bool = False) -> dict[str, int]:
    """Per-channel Z-correlation signs the AUC applies to its stored bit.

    ``+1`` stores the AUC's Z bit unchanged, ``-1`` stores it flipped.  With
    ``literal=True`` the AUC flips its own record on every channel whenever the
    source is the W-type state, a reading kept only for comparison.
    """
    return dict(_signs(NamedState(kind), bool(literal)))


@lru_cache(maxsize=None)
def _signs(kind: NamedState, literal: bool) -> tuple[tuple[str, int], ...]:
    if kind is NamedState.BELL_PHI_PLUS:
        state = make_named_state(kind, ("SIM1", "AUC"))
        return (("A", round(z_correlation(state, 0, 1))),)
    if kind not in (NamedState.GHZ3, NamedState.W_PAPER):
        raise ValueError(f"unknown source state {kind!r}")
    if literal and kind is NamedState.W_PAPER:
        return (("A", -1), ("B", -1))
    state = make_named_state(kind, ("SIM1", "SIM2", "AUC"))
    return (("A", round(z_correlation(state, 0, 2))), ("B", round(z_correlation(state, 1, 2))))


@dataclass(frozen=True, slots=True)
class RoundRecord:
    round_index: int
    axes: tuple[Axis, Axis, Axis]
    raw_bits: tuple[int, int, int]
    bits: tuple[int, int, int]
    round_class: RoundClass
    null_applied: bool

    def __post_init__(self) -> None:
        if self.null_applied and self.round_class is not RoundClass.NULL_GRAY:
            raise ValueError("Null adjustment only applies to NullGray rounds")


@dataclass(frozen=True)
class ChannelKeys:
    """Key material the AUC holds for channel A (SIM1) and channel B (SIM2)."""

    qk_a: str
    qk_b: str
    rounds_a: tuple[int, ...]
    rounds_b: tuple[int, ...]

    def key(self, channel: str) -> str:
        return {"A": self.qk_a, "B": self.qk_b}[channel]

    def rounds(self, channel: str) -> tuple[int, ...]:
        return {"A": self.rounds_a, "B": self.rounds_b}[channel]


@dataclass(frozen=True)
class SimKey:
    """The sifted key as one SIM sees it."""

    bits: str
    rounds: tuple[int, ...]
