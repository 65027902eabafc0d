"""Bit-flip noise on SIM readout and the QBER-threshold acceptance stub.

Only the discard rule is modeled: a window is accepted when its sifted error
rate is at most the threshold.  Error correction and privacy amplification
that would follow in a real deployment are not implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from ..runtime import RngStream, WindowRequest
from .memory import (
    AcceptPolicy,
    AucLedger,
    BasisContract,
    MemDecision,
    QuantumMemoryBank,
    sift_and_decide,
    sim_measure_window,
)


@dataclass(frozen=True)
class NoiseModel:
    p_flip: float = 0.0
    threshold: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_flip <= 1.0:
            raise ValueError("p_flip must lie in [0, 1]")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")

    def max_errors(self, matched: int) -> int:
        return math.floor(self.threshold * matched + 1e-9)

    def accept_probability(self, matched: int) -> float:
        """Chance that ``matched`` sifted bits pass the threshold (binomial tail)."""
        return float(binom.cdf(self.max_errors(matched), matched, self.p_flip))


def noise_and_qber(
    ledger: AucLedger,
    bank: QuantumMemoryBank,
    request: WindowRequest,
    contract: BasisContract,
    rng: RngStream | np.random.Generator,
    p_flip: float = 0.0,
    threshold: float = 0.0,
    policy: AcceptPolicy = AcceptPolicy(),
) -> MemDecision:
    """Noisy window measurement followed by the thresholded decision."""
    noise = NoiseModel(p_flip, threshold)
    report = sim_measure_window(bank, request, contract, rng, noise.p_flip)
    return sift_and_decide(ledger, report, policy, noise.threshold)


__all__ = ["NoiseModel", "noise_and_qber"]
