import itertools

import pytest

from oracles import joint_distribution
from qgsm.proto_tri import RoundClass, RoundRecord, classify_round, null_adjust, reconcile_state_correlations
from qgsm.qstate import Axis, NamedState, make_named_state

X, Z, Y = Axis.X, Axis.Z, Axis.Y
LEGS = ("SIM1", "SIM2", "AUC")

# Expected class for every basis triple (SIM1, SIM2, AUC).
TABLE = {
    "ZZZ": RoundClass.BOTH_GREEN,
    "XXX": RoundClass.NULL_GRAY,
    "ZXZ": RoundClass.CHAN_A_BLUE,
    "XZZ": RoundClass.CHAN_B_YELLOW,
    "ZZX": RoundClass.DISCARD_RED,
    "ZXX": RoundClass.DISCARD_RED,
    "XZX": RoundClass.DISCARD_RED,
    "XXZ": RoundClass.DISCARD_RED,
}


@pytest.mark.parametrize("triple,cls", sorted(TABLE.items()))
def test_classification_total(triple, cls):
    assert classify_round(tuple(Axis(c) for c in triple)) is cls


def test_classification_accepts_lists():
    assert classify_round([Z, X, Z]) is RoundClass.CHAN_A_BLUE


@pytest.mark.parametrize("bad", [(Y, Z, Z), (Z, Z), (Z, Z, Z, Z)])
def test_classification_rejects(bad):
    with pytest.raises(ValueError):
        classify_round(bad)


def test_feeds_follow_colour_semantics():
    assert {c for c in RoundClass if c.feeds_a} == {RoundClass.CHAN_A_BLUE, RoundClass.BOTH_GREEN, RoundClass.NULL_GRAY}
    assert {c for c in RoundClass if c.feeds_b} == {RoundClass.CHAN_B_YELLOW, RoundClass.BOTH_GREEN, RoundClass.NULL_GRAY}
    assert not RoundClass.DISCARD_RED.feeds_a and not RoundClass.DISCARD_RED.feeds_b


@pytest.mark.parametrize("kind", [NamedState.GHZ3, NamedState.W_PAPER])
def test_discarded_x_pairs_are_uncorrelated(kind):
    amps = make_named_state(kind, LEGS).amplitudes
    for pair in [(0, 2), (1, 2)]:
        d = joint_distribution(amps, 3, [(pair[0], "X"), (pair[1], "X")])
        for bits in itertools.product((0, 1), repeat=2):
            assert d[bits] == pytest.approx(0.25, abs=1e-12)


@pytest.mark.parametrize("auc,sim,want", [(0, 1, 0), (1, 0, 1), (0, 0, 0), (1, 1, 1)])
def test_null_adjust(auc, sim, want):
    assert null_adjust(auc, sim) == want


def test_reconcile_signs():
    assert reconcile_state_correlations(NamedState.GHZ3) == {"A": 1, "B": 1}
    assert reconcile_state_correlations(NamedState.W_PAPER) == {"A": 1, "B": -1}
    assert reconcile_state_correlations(NamedState.BELL_PHI_PLUS) == {"A": 1}
    assert reconcile_state_correlations("W_PAPER", literal=True) == {"A": -1, "B": -1}
    with pytest.raises(ValueError):
        reconcile_state_correlations("nope")


@pytest.mark.parametrize("kind", [NamedState.GHZ3, NamedState.W_PAPER])
def test_reconcile_matches_z_oracle(kind):
    amps = make_named_state(kind, LEGS).amplitudes
    signs = reconcile_state_correlations(kind)
    for ch, sim in (("A", 0), ("B", 1)):
        d = joint_distribution(amps, 3, [(sim, "Z"), (2, "Z")])
        corr = sum(p * (1 if a == b else -1) for (a, b), p in d.items())
        assert corr == pytest.approx(signs[ch])


def test_round_record_invariant():
    RoundRecord(0, (X, X, X), (0, 1, 1), (1, 1, 1), RoundClass.NULL_GRAY, True)
    with pytest.raises(ValueError):
        RoundRecord(0, (Z, Z, Z), (0, 0, 0), (0, 0, 0), RoundClass.BOTH_GREEN, True)
