from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import binomial_pmf, fixed_count_brute
from qgsm.proto_qmem import (
    MAX_EXACT_M,
    AcceptPolicy,
    BasisContract,
    fixed_count_matched,
    fixed_count_pmf,
    match_probability,
    matched_count_pmf,
    provision,
    q_contract,
    run_challenges,
)


def test_printed_value():
    p = match_probability(10, 5)
    assert p == Fraction(252, 1024)
    assert round(float(p), 3) == 0.246


def test_edge_values():
    for m in (1, 7, 64):
        assert match_probability(m, 0) == Fraction(1, 2**m)
        assert match_probability(m, m) == Fraction(1, 2**m)


@pytest.mark.parametrize("m", range(1, MAX_EXACT_M + 1))
def test_pmf_sums_to_one_and_matches_oracle(m):
    pmf = matched_count_pmf(m)
    assert sum(pmf) == 1
    assert pmf == binomial_pmf(m)
    assert sum(comb(m, q) for q in range(m + 1)) == 2**m


def test_bad_arguments():
    with pytest.raises(ValueError):
        match_probability(10, 11)
    with pytest.raises(ValueError):
        match_probability(65, 3)
    with pytest.raises(ValueError):
        match_probability(0, 0)
    with pytest.raises(ValueError):
        q_contract(0)


@pytest.mark.parametrize("m,q", [(10, 5), (11, 6), (1, 1), (2, 1), (64, 32)])
def test_q_contract(m, q):
    assert q_contract(m) == q


@given(st.integers(1, MAX_EXACT_M))
def test_modal_count_maximizes(m):
    pmf = matched_count_pmf(m)
    assert pmf[q_contract(m)] == max(pmf)


def test_odd_argmax():
    pmf = matched_count_pmf(11)
    # C(11, 5) == C(11, 6): (m+1)/2 is a maximizer, tied with (m-1)/2.
    assert {q for q, p in enumerate(pmf) if p == max(pmf)} == {5, 6}
    assert pmf[q_contract(11)] == max(pmf)


@pytest.mark.parametrize("m", range(1, 13))
def test_fixed_count_exhaustive(m):
    for q in range(m + 1):
        brute = fixed_count_brute(m, q)
        total = comb(m, q) ** 2
        pmf = fixed_count_pmf(m, q)
        assert {k: v * total for k, v in pmf.items()} == brute
        assert all(k % 2 == m % 2 for k in brute)


def test_fixed_count_frozen_example():
    assert fixed_count_brute(10, 5) == {0: 252, 2: 6300, 4: 25200, 6: 25200, 8: 6300, 10: 252}
    # The literal requirement of exactly 5 matches can never be met here.
    assert 5 not in fixed_count_pmf(10, 5)


def test_fixed_count_matched_formula():
    assert fixed_count_matched(10, 5, 5) == 10
    assert fixed_count_matched(10, 5, 0) == 0
    with pytest.raises(ValueError):
        fixed_count_matched(10, 7, 3)


def test_simulated_fixed_count_both_sides_is_even():
    m, trials = 10, 5000
    ledger, bank = provision(m * trials, seed=2, auc_contract=BasisContract.fixed(5), block=m)
    assert (ledger.axes.reshape(trials, m).sum(axis=1) == 5).all()
    batch = run_challenges(ledger, bank, m, trials, BasisContract.fixed(5), AcceptPolicy.exact_q(5), np.random.default_rng(1))
    assert (batch.matched % 2 == 0).all()
    assert not batch.accepted.any()
    counts = np.bincount(batch.matched, minlength=m + 1)
    pmf = fixed_count_pmf(m, 5)
    for k, p in pmf.items():
        sigma = (float(p) * (1 - float(p)) / trials) ** 0.5
        assert abs(counts[k] / trials - float(p)) <= 4 * sigma + 1e-12
