"""Attacks on a provisioned memory bank."""

from __future__ import annotations

from enum import Enum

import numpy as np

from ..runtime import RngStream
from .memory import QuantumMemoryBank


class CloneModel(str, Enum):
    MEASURE_RESEND = "MeasureResend"
    RANDOM_FRESH = "RandomFresh"


def clone_attack(
    bank: QuantumMemoryBank,
    model: CloneModel | str = CloneModel.MEASURE_RESEND,
    rng: RngStream | np.random.Generator | None = None,
    *,
    forced_axes: bool = False,
) -> tuple[QuantumMemoryBank, QuantumMemoryBank]:
    """Return ``(clone, original)`` after an attacker copies the card.

    MeasureResend measures every unconsumed cell in a random axis and writes
    the observed eigenstate into both banks.  ``forced_axes`` hands the
    attacker the provisioning axes, which leaves the original intact.
    RandomFresh fills the clone with random eigenstates and leaves the
    original as it was.  The input bank is not modified.
    """
    model = CloneModel(model)
    gen = rng.generator if isinstance(rng, RngStream) else (rng or np.random.default_rng(0))
    live = ~bank.consumed
    if not live.any():
        raise ValueError("bank has no unconsumed cells to attack")
    original = bank.copy()
    clone = bank.copy()
    n = int(live.sum())
    if model is CloneModel.RANDOM_FRESH:
        clone.axes[live] = gen.integers(0, 2, size=n, dtype=np.uint8)
        clone.bits[live] = gen.integers(0, 2, size=n, dtype=np.uint8)
        return clone, original
    stored_axes = bank.axes[live]
    axes = stored_axes.copy() if forced_axes else gen.integers(0, 2, size=n, dtype=np.uint8)
    coin = gen.integers(0, 2, size=n, dtype=np.uint8)
    bits = np.where(axes == stored_axes, bank.bits[live], coin).astype(np.uint8)
    for target in (clone, original):
        target.axes[live] = axes
        target.bits[live] = bits
    return clone, original


__all__ = ["CloneModel", "clone_attack"]
