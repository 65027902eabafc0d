"""Exact basis-match combinatorics for windows of m positions."""

from __future__ import annotations

from fractions import Fraction
from math import comb

MAX_EXACT_M = 64


def match_probability(m: int, q: int) -> Fraction:
    """P(exactly q of m independent uniform X/Z picks agree) = C(m, q) / 2^m."""
    if not 1 <= m <= MAX_EXACT_M:
        raise ValueError(f"m must be in 1..{MAX_EXACT_M}, got {m}")
    if not 0 <= q <= m:
        raise ValueError(f"q must be in 0..{m}, got {q}")
    return Fraction(comb(m, q), 1 << m)


def matched_count_pmf(m: int) -> list[Fraction]:
    return [match_probability(m, q) for q in range(m + 1)]


def q_contract(m: int) -> int:
    """Most likely match count: m/2 for even m, (m+1)/2 for odd m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return m // 2 if m % 2 == 0 else (m + 1) // 2


def fixed_count_matched(m: int, q: int, overlap: int) -> int:
    """Matches when both sides put exactly q X picks in m slots, sharing ``overlap`` of them.

    Both-X slots give ``overlap`` matches and both-Z slots ``m - 2q + overlap``.
    """
    if not 0 <= q <= m:
        raise ValueError(f"q must be in 0..{m}")
    if not max(0, 2 * q - m) <= overlap <= q:
        raise ValueError(f"overlap {overlap} impossible for m={m}, q={q}")
    return m - 2 * (q - overlap)


def fixed_count_pmf(m: int, q: int) -> dict[int, Fraction]:
    """Distribution of the match count when both sides use FixedCount(q).

    The overlap of two independent uniform q-subsets is hypergeometric.
    """
    total = comb(m, q)
    out: dict[int, Fraction] = {}
    for k in range(max(0, 2 * q - m), q + 1):
        ways = comb(q, k) * comb(m - q, q - k)
        out[fixed_count_matched(m, q, k)] = Fraction(ways, total)
    return out
