import pytest

from qgsm.fixtures import (
    A3_EXPECTED,
    FIXTURES,
    TWENTY_ROUND_ROWS,
    ghz,
    run_fixtures,
    w_state,
)
from qgsm.qstate import Axis, Sign, measure_forced, outcome_distribution


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_each_fixture_passes(name):
    result = FIXTURES[name]()
    assert result.passed, result.line()
    assert result.line().startswith("PASS ")


def test_run_fixtures_covers_all():
    assert len(run_fixtures()) == len(FIXTURES)


def test_twenty_rows_complete():
    assert [row[0] for row in TWENTY_ROUND_ROWS] == list(range(20, 0, -1))


def test_a3_expected_values_independent():
    rand = 0b10110
    assert A3_EXPECTED == {
        "res": (0b0110 + rand) % 2**32,
        "qxres1": (0b01011 + rand) % 2**32,
        "qxres2": (0b10110101 + rand) % 2**32,
    }


@pytest.mark.parametrize("factory", [ghz, w_state])
def test_null_round_sign_pattern_possible(factory):
    # The printed Null round (AUC -, SIM1 -, SIM2 +) has nonzero probability.
    s = factory()
    d = outcome_distribution(s, [(2, Axis.X), (0, Axis.X), (1, Axis.X)])
    assert d[(1, 1, 0)] == pytest.approx(0.25)
    measure_forced(s, 2, Axis.X, Sign.MINUS)
