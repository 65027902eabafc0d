"""Acceptance criteria, one test each, with a printed PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` and the lines are repeated in the
terminal summary; ``python tests/test_acceptance.py`` prints them directly.
"""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import chisquare

from oracles import binomial_pmf, binomial_sigma, equal_key_probability, post_measurement, same_ray
from qgsm.auth_gsm import SecretKey, classical_authenticate
from qgsm.fixtures import memory_example_ledger, memory_example_report
from qgsm.proto_qmem import (
    AcceptPolicy,
    BasisContract,
    CloneModel,
    MemVerdict,
    clone_attack,
    match_probability,
    provision,
    run_challenges,
    sift_and_decide,
)
from qgsm.proto_tri import (
    DEFAULT_CONFIG,
    ScenarioKind,
    TriConfig,
    eve_cnot_session,
    null_adjust,
    run_scenario,
    run_session,
)
from qgsm.qstate import Axis, NamedState, Sign, from_amplitudes, make_named_state, measure_forced, outcome_distribution
from qgsm.runtime import PartyId, RngStream, open_session

LINES: dict[str, str] = {}
LEGS = ("SIM1", "SIM2", "AUC")


def report(cid: str, title: str, ok: bool, detail: str, capsys=None) -> None:
    line = f"{'PASS' if ok else 'FAIL'} [{cid}] {title}: {detail}"
    LINES[cid] = line
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)


# ---------------------------------------------------------------------------


def check_c1():
    n = 100_000
    t0 = time.perf_counter()
    result = run_session(TriConfig(num_emissions=n, basis_policy="all_z", seed=101))
    elapsed = time.perf_counter() - t0
    agree = sum(1 for rec in result.rounds if rec.raw_bits[0] == rec.raw_bits[1] == rec.raw_bits[2])
    ok = agree == n and result.emissions == n and elapsed < 5.0
    return ok, f"{agree}/{n} rounds agree, {elapsed:.2f}s (limit 5s)"


def check_c2():
    n = 100_000
    parts = []
    ok = True
    for kind in (NamedState.GHZ3, NamedState.W_PAPER):
        result = run_session(TriConfig(source_kind=kind, num_emissions=n, basis_policy="all_x", seed=102))
        even = sum(1 for rec in result.rounds if sum(rec.raw_bits) % 2 == 0)
        b3 = [rec.raw_bits[2] for rec in result.rounds]
        adjusted = sum(
            1
            for rec, auc in zip(result.rounds, b3)
            if null_adjust(auc, rec.raw_bits[0]) == null_adjust(auc, rec.raw_bits[1]) == auc
            and rec.bits == (auc, auc, auc)
        )
        ok &= even == n and adjusted == n and result.emissions == n
        parts.append(f"{kind.value} even {even}/{n}, agree after Null {adjusted}/{n}")
    return ok, "; ".join(parts)


def _ket(*singles):
    vecs = {"0": [1, 0], "1": [0, 1], "+": [1, 1], "-": [1, -1]}
    out = np.array([1.0 + 0j])
    for s in singles:
        out = np.kron(out, np.array(vecs[s], dtype=complex))
    return out / np.linalg.norm(out)


def check_c3():
    r = 1 / math.sqrt(2)
    ghz = make_named_state(NamedState.GHZ3, LEGS)
    w = make_named_state(NamedState.W_PAPER, LEGS)
    X, Z, P, M = Axis.X, Axis.Z, Sign.PLUS, Sign.MINUS
    replays = {
        # (start, first step, target after first step, remaining steps, final target)
        "ghz AUC X+ -> (|00>+|11>)|+>": (ghz, [(2, X, P)], np.kron([r, 0, 0, r], _ket("+"))),
        "ghz AUC Z+,SIM2 Z+,SIM1 X+ -> |+>|0>|0>": (ghz, [(2, Z, P), (1, Z, P), (0, X, P)], _ket("+", "0", "0")),
        "ghz AUC X-,SIM1 X-,SIM2 X+ -> |->|+>|->": (ghz, [(2, X, M), (0, X, M), (1, X, P)], _ket("-", "+", "-")),
        "W AUC X- -> (|01>-|10>)|->": (w, [(2, X, M)], np.kron(np.array([0, 1, -1, 0]) / math.sqrt(2), _ket("-"))),
        "W AUC X-,SIM1 X-,SIM2 X+ -> |->|+>|->": (w, [(2, X, M), (0, X, M), (1, X, P)], _ket("-", "+", "-")),
    }
    results = []
    for name, (start, steps, target) in replays.items():
        state = start
        dense = np.asarray(start.amplitudes)
        for q, a, s in steps:
            state = measure_forced(state, q, a, s)
            dense = post_measurement(dense, 3, q, a.value, 0 if s is P else 1)
        got = state.as_array()
        overlap = abs(np.vdot(got, target) / (np.linalg.norm(got) * np.linalg.norm(target)))
        results.append((name, 1 - overlap <= 1e-10 and same_ray(got, dense, 1e-10), 1 - overlap))
    ok = all(r[1] for r in results)
    worst = max(r[2] for r in results)
    return ok, f"{sum(r[1] for r in results)}/{len(results)} replays match, worst 1-|overlap| = {worst:.1e}"


def check_c4():
    t0 = time.perf_counter()
    sim = run_scenario(ScenarioKind.SIMULTANEOUS, 10_000, seed=104)
    solo = run_scenario(ScenarioKind.SOLO_LOGIN, 1_000, seed=105)
    fwd = run_scenario(ScenarioKind.KEY_FORWARDING, 1_000, seed=106)
    elapsed = time.perf_counter() - t0
    emissions = min(o.emissions for o in sim.outcomes)
    ok = (
        sim.detection_rate >= 0.99
        and emissions >= 20
        and solo.accept_rate == 1.0
        and fwd.detection_rate == 0.0
        and elapsed < 60.0
    )
    return ok, (
        f"Simultaneous detect {sim.detection_rate:.4f} over {sim.trials} (min emissions {emissions}); "
        f"SoloLogin accept {solo.accept_rate:.3f} over {solo.trials}; "
        f"KeyForwarding detect {fwd.detection_rate:.3f} over {fwd.trials}; {elapsed:.1f}s (limit 60s)"
    )


def info_c4_twenty():
    n = 2000
    stats = run_scenario(ScenarioKind.SIMULTANEOUS, n, seed=107, config=TriConfig(num_emissions=20, min_key_bits=0))
    want = 1 - equal_key_probability(20)
    return f"exactly 20 emissions, no top-up: detect {stats.detection_rate:.4f} vs oracle {want:.4f} (n={n})"


def check_c5():
    exact = match_probability(10, 5) == Fraction(252, 1024)
    sums = all(sum(match_probability(m, q) for q in range(m + 1)) == 1 for m in range(1, 65))
    m, trials = 10, 100_000
    ledger, bank = provision(m * trials, seed=105)
    batch = run_challenges(ledger, bank, m, trials, BasisContract.iid(), AcceptPolicy(), RngStream(105, PartyId.SIM1, "qmem"))
    counts = np.bincount(batch.matched, minlength=m + 1)
    expected = np.array([float(p) for p in binomial_pmf(m)]) * trials
    pvalue = float(chisquare(counts, expected).pvalue)
    ok = exact and sums and pvalue > 0.001
    return ok, f"P(10,5)=252/1024 {exact}; sum=1 for m<=64 {sums}; chi-square p={pvalue:.3f} over {trials} trials"


def check_c6():
    d = sift_and_decide(memory_example_ledger(), memory_example_report(), AcceptPolicy.threshold(4))
    ok = d.key == "1011" and d.verdict is MemVerdict.ACCEPT
    return ok, f"key {d.key!r}, verdict {d.verdict.value}"


def check_c7():
    m, trials = 10, 100_000
    bit_check = AcceptPolicy.threshold(0)
    ledger, bank = provision(m * trials, seed=107)
    _, original = clone_attack(bank, CloneModel.MEASURE_RESEND, RngStream(107, PartyId.EVE, "clone"))
    batch = run_challenges(ledger, original, m, trials, BasisContract.iid(), bit_check, RngStream(107, PartyId.SIM1, "qmem"))
    p = 0.75 ** batch.matched.astype(float)
    expected = float(p.mean())
    sigma = math.sqrt(float((p * (1 - p)).sum())) / trials
    observed = float(batch.accepted.mean())
    z = (observed - expected) / sigma

    h_ledger, h_bank = provision(m * trials, seed=108)
    honest = run_challenges(h_ledger, h_bank, m, trials, BasisContract.iid(), bit_check, RngStream(108, PartyId.SIM1, "qmem"))
    honest_rate = float(honest.accepted.mean())
    ok = abs(z) <= 3 and honest_rate == 1.0
    return ok, (
        f"MeasureResend accept {observed:.4f} vs (3/4)^k oracle {expected:.4f} (z={z:+.2f}, {trials} trials); "
        f"honest accept {honest_rate:.3f} under Threshold(0)"
    )


def info_c7_default_policy():
    m, trials = 10, 100_000
    ledger, bank = provision(m * trials, seed=109)
    batch = run_challenges(ledger, bank, m, trials, BasisContract.iid(), AcceptPolicy(), RngStream(109, PartyId.SIM1, "qmem"))
    want = float(sum(binomial_pmf(m)[m // 2 :]))
    return (
        f"honest accept under default Threshold(m//2): {batch.accepted.mean():.4f} "
        f"(oracle P(matches >= 5) = {want:.4f}); all rejections are count shortfalls, "
        f"bit errors {int(batch.mismatches.sum())}"
    )


def check_c8():
    n = 1000
    base = run_scenario(ScenarioKind.SIMULTANEOUS, n, seed=108)
    detected = 0
    agree = total = 0
    for t in range(n):
        rep = eve_cnot_session("A", DEFAULT_CONFIG.replace(seed=base.outcomes[t].seed))
        detected += rep.verdict.clone_detected
        agree += rep.untapped_agreement.agree
        total += rep.untapped_agreement.total
    p_eve = detected / n
    p_base = base.detection_rate
    pooled = (detected + sum(o.detected for o in base.outcomes)) / (2 * n)
    sigma_diff = math.sqrt(max(pooled * (1 - pooled), 1e-12) * 2 / n)
    same = abs(p_eve - p_base) <= 3 * sigma_diff or p_eve == p_base
    rate = agree / total
    chance = abs(rate - 0.5) <= 4 * binomial_sigma(0.5, total)
    return same and chance, (
        f"detect with Eve {p_eve:.4f} vs baseline {p_base:.4f} (3 sigma = {3 * sigma_diff:.4f}); "
        f"Eve agreement with untapped channel {rate:.4f} over {total} bits (4 sigma = {4 * binomial_sigma(0.5, total):.4f})"
    )


def _random_case(gen):
    n = int(gen.integers(1, 5))
    amps = gen.normal(size=1 << n) + 1j * gen.normal(size=1 << n)
    state = from_amplitudes(amps, tuple(range(n)))
    k = int(gen.integers(1, n + 1))
    qubits = gen.permutation(n)[:k]
    axes = [list(Axis)[int(i)] for i in gen.integers(0, 3, size=k)]
    return state, list(zip(qubits.tolist(), axes))


def check_c9():
    gen = np.random.default_rng(109)
    worst_perm = worst_sig = 0.0
    cases = 1000
    for _ in range(cases):
        state, assignment = _random_case(gen)
        base = outcome_distribution(state, assignment)
        perm = gen.permutation(len(assignment)).tolist()
        shuffled = outcome_distribution(state, [assignment[i] for i in perm])
        for bits, p in base.items():
            worst_perm = max(worst_perm, abs(shuffled[tuple(bits[i] for i in perm)] - p))
        if state.num_qubits > 1:
            target = int(gen.integers(0, state.num_qubits))
            axis = list(Axis)[int(gen.integers(0, 3))]
            ref = outcome_distribution(state, [(target, axis)])[(0,)]
            others = [q for q in range(state.num_qubits) if q != target]
            choice = [list(Axis)[int(i)] for i in gen.integers(0, 3, size=len(others))]
            joint = outcome_distribution(state, [(target, axis)] + list(zip(others, choice)))
            marginal = sum(p for bits, p in joint.items() if bits[0] == 0)
            worst_sig = max(worst_sig, abs(marginal - ref))
    ok = worst_perm <= 1e-12 and worst_sig <= 1e-12
    return ok, f"{cases} cases: max permutation deviation {worst_perm:.1e}, max marginal shift {worst_sig:.1e} (limit 1e-12)"


def check_c10():
    n = 10_000
    rng = RngStream(110, PartyId.SEP, "ki")
    accepted = 0
    for t in range(n):
        ki = SecretKey(rng.uint(128))
        clone = SecretKey(ki.value)
        accepted += classical_authenticate(open_session([PartyId.SIM1, PartyId.AUC], t), clone, ki).accepted
    return accepted == n, f"clone with copied Ki accepted in {accepted}/{n} trials"


CRITERIA = {
    "1": ("GHZ all-Z correlations", check_c1),
    "2": ("X parity and Null soundness", check_c2),
    "3": ("projective measurement replays", check_c3),
    "4": ("clone detection under dual login", check_c4),
    "5": ("basis-match combinatorics", check_c5),
    "6": ("memory challenge example key", check_c6),
    "7": ("measure-resend clone on quantum memory", check_c7),
    "8": ("CNOT eavesdropper does not block detection", check_c8),
    "9": ("order invariance and no-signaling", check_c9),
    "10": ("classical baseline accepts a copied Ki", check_c10),
}
INFO = {
    "4-info": info_c4_twenty,
    "7-info": info_c7_default_policy,
}


@pytest.mark.parametrize("cid", list(CRITERIA), ids=[f"criterion_{c}" for c in CRITERIA])
def test_criterion(cid, capsys):
    title, check = CRITERIA[cid]
    ok, detail = check()
    report(cid, title, ok, detail, capsys)
    assert ok, detail


@pytest.mark.parametrize("key", list(INFO))
def test_informational(key, capsys):
    line = f"INFO [{key}] {INFO[key]()}"
    LINES[key] = line
    with capsys.disabled():
        print("\n" + line)


if __name__ == "__main__":
    for cid, (title, check) in CRITERIA.items():
        report(cid, title, *check())
    for key, fn in INFO.items():
        print(f"INFO [{key}] {fn()}")
