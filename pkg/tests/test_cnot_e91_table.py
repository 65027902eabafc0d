import math

import pytest

from oracles import binomial_sigma
from qgsm.proto_tri import (
    DEFAULT_CONFIG,
    ConfigError,
    TriConfig,
    eve_cnot_session,
    mutual_information,
    read_round_table,
    run_e91_reference,
    run_session,
    write_round_table,
)
from qgsm.proto_tri.table import ROUND_COLUMNS
from qgsm.qstate import Axis, NamedState, apply_cnot, attach_ancilla, make_named_state, outcome_distribution

# ---------------------------------------------------------------------------
# CNOT attack


def test_cnot_copies_z_basis_oracle():
    s = make_named_state(NamedState.GHZ3, ("SIM1", "SIM2", "AUC"))
    ext = apply_cnot(attach_ancilla(s, label="EVE"), 0, 3)
    d = outcome_distribution(ext, [(0, Axis.Z), (3, Axis.Z)])
    assert d[(0, 1)] == d[(1, 0)] == 0


@pytest.mark.parametrize("target", [["A", "B"], "C", []])
def test_eve_on_both_channels_is_config_error(target):
    with pytest.raises(ConfigError):
        eve_cnot_session(target)


def test_eve_agreement_and_information():
    z = [0, 0]
    untapped = [0, 0]
    xs, ys = [], []
    for i in range(150):
        rep = eve_cnot_session("A", DEFAULT_CONFIG.replace(seed=1000 + i), dual_login=False)
        z[0] += rep.z_agreement.agree
        z[1] += rep.z_agreement.total
        untapped[0] += rep.untapped_agreement.agree
        untapped[1] += rep.untapped_agreement.total
        keys = rep.keys
        for r, b in zip(keys.rounds_b, keys.qk_b):
            if rep.result.rounds[r].round_class.single_channel:
                xs.append(rep.eve_bits[r])
                ys.append(int(b))
    assert z[0] == z[1] > 0
    rate = untapped[0] / untapped[1]
    assert abs(rate - 0.5) <= 4 * binomial_sigma(0.5, untapped[1])
    # Plug-in MI of independent bits is about 1/(2 n ln 2); allow a wide margin.
    assert mutual_information(xs, ys) < 10 / (2 * len(xs) * math.log(2))


def test_eve_on_b_mirrors():
    rep = eve_cnot_session("B", DEFAULT_CONFIG.replace(seed=3))
    assert rep.channel == "B" and rep.z_agreement.rate == 1.0
    assert rep.verdict is not None


def test_mutual_information_basic():
    assert mutual_information([0, 1, 0, 1], [0, 1, 0, 1]) == pytest.approx(1.0)
    assert mutual_information([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0)
    assert mutual_information([], []) == 0.0
    with pytest.raises(ValueError):
        mutual_information([0], [])


# ---------------------------------------------------------------------------
# E91 reference


def test_e91_keys_and_length():
    n = 10_000
    res = run_e91_reference(n, seed=4)
    assert res.keys_match
    assert abs(res.sifted_length - n / 2) <= 4 * math.sqrt(n / 4)


def test_e91_all_z_and_disclosure():
    assert run_e91_reference(200, seed=1, basis_policy="all_z").sifted_length == 200
    res = run_e91_reference(2000, seed=2, disclosure_fraction=0.1)
    assert res.disclosed_alice == res.disclosed_bob
    assert len(res.disclosed_rounds) == round(0.1 * res.sifted_length)
    assert len(res.alice_key) == res.sifted_length - len(res.disclosed_rounds)
    assert not set(res.disclosed_rounds) & set(
        r for i, r in enumerate(res.sifted_rounds) if r not in res.disclosed_rounds
    )


@pytest.mark.parametrize("kwargs", [{"num_pairs": 0}, {"num_pairs": 5, "disclosure_fraction": 1.5}, {"num_pairs": 5, "basis_policy": "y"}])
def test_e91_errors(kwargs):
    with pytest.raises(ValueError):
        run_e91_reference(seed=0, **kwargs)


# ---------------------------------------------------------------------------
# round table


def test_round_table_round_trip(tmp_path):
    result = run_session(TriConfig(num_emissions=25, seed=5))
    path = tmp_path / "rounds.csv"
    write_round_table(path, result.rounds, header={"seed": 5})
    assert path.read_text().startswith("# seed=5\n")
    rows = read_round_table(path)
    assert len(rows) == 25
    assert tuple(rows[0])[: len(ROUND_COLUMNS)] == ROUND_COLUMNS
    for row, rec in zip(rows, result.rounds):
        assert int(row["round"]) == rec.round_index
        assert row["class"] == rec.round_class.value
        assert (row["sim1_basis"], row["sim2_basis"], row["auc_basis"]) == tuple(a.value for a in rec.axes)
        assert int(row["auc_bit"]) == rec.raw_bits[2]
        assert int(row["sim1_CB"]) == rec.bits[0]
        ket = row["auc_Rs"]
        assert ket in {"|0>", "|1>", "|+>", "|->"}
