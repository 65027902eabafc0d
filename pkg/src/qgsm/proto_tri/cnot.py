"""Eve's CNOT-ancilla attack on one quantum channel."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from ..qstate import Axis
from ..runtime import PartyId
from .auth import AuthCenter, CloneVerdict, SimCredentials, login
from .scenarios import DEFAULT_CONFIG, provision_ki
from .session import ConfigError, SessionResult, TriConfig, run_session

SIM1, SIM2 = PartyId.SIM1, PartyId.SIM2
_OTHER = {"A": "B", "B": "A"}


@dataclass(frozen=True)
class Agreement:
    agree: int
    total: int

    @property
    def rate(self) -> float:
        return self.agree / self.total if self.total else float("nan")


@dataclass(frozen=True)
class EveReport:
    channel: str
    result: SessionResult
    eve_bits: dict[int, int]
    z_agreement: Agreement
    null_agreement: Agreement
    untapped_agreement: Agreement
    verdict: CloneVerdict | None

    @property
    def keys(self):
        return self.result.auc_keys


def _agreement(eve_bits: dict[int, int], pairs) -> Agreement:
    pairs = list(pairs)
    return Agreement(sum(1 for r, b in pairs if eve_bits[r] == b), len(pairs))


def mutual_information(xs: Sequence[int], ys: Sequence[int]) -> float:
    """Plug-in estimate of I(X;Y) in bits for two binary sequences."""
    if len(xs) != len(ys):
        raise ValueError("sequences must have equal length")
    n = len(xs)
    if n == 0:
        return 0.0
    joint = Counter(zip(xs, ys))
    px = Counter(xs)
    py = Counter(ys)
    return sum(
        c / n * math.log2(c * n / (px[x] * py[y])) for (x, y), c in joint.items()
    )


def eve_cnot_session(
    target_channel: str | Sequence[str],
    config: TriConfig | None = None,
    *,
    dual_login: bool = True,
    mode: str = "a3",
) -> EveReport:
    """Run a session with Eve CNOT-ing one leg, then optionally a dual login.

    Eve measures each ancilla in the basis the tapped SIM announces.  Her
    agreement is reported on three round sets: Z-sifted rounds of the tapped
    channel, its Null rounds, and rounds that feed only the other channel.
    """
    channels = [target_channel] if isinstance(target_channel, str) else list(target_channel)
    if len(channels) != 1 or channels[0] not in _OTHER:
        raise ConfigError(
            "Eve can interpose on exactly one channel, 'A' or 'B'; "
            f"got {target_channel!r}"
        )
    channel = channels[0]
    base = DEFAULT_CONFIG if config is None else config
    result = run_session(base.replace(eve=channel))
    keys = result.auc_keys
    by_round = {rec.round_index: rec for rec in result.rounds}

    tapped = list(zip(keys.rounds(channel), keys.key(channel)))
    z_pairs = [(r, int(b)) for r, b in tapped if by_round[r].axes[2] is Axis.Z]
    null_pairs = [(r, int(b)) for r, b in tapped if by_round[r].null_applied]
    other = _OTHER[channel]
    exclusive = [
        (r, int(b))
        for r, b in zip(keys.rounds(other), keys.key(other))
        if by_round[r].round_class.single_channel
    ]

    verdict = None
    if dual_login:
        ki = provision_ki(result)
        classes = [rec.round_class for rec in result.rounds]
        center = AuthCenter.from_session(ki, keys, classes, mode=mode)
        cards = {
            SIM1: SimCredentials(ki, result.sim_keys[SIM1].bits),
            SIM2: SimCredentials(ki, result.sim_keys[SIM2].bits),
        }
        verdict = login(result.session, center, cards)

    return EveReport(
        channel=channel,
        result=result,
        eve_bits=result.eve_bits,
        z_agreement=_agreement(result.eve_bits, z_pairs),
        null_agreement=_agreement(result.eve_bits, null_pairs),
        untapped_agreement=_agreement(result.eve_bits, exclusive),
        verdict=verdict,
    )


__all__ = ["Agreement", "EveReport", "eve_cnot_session", "mutual_information"]
