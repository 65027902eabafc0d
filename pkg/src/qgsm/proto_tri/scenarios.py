"""Login scenarios for original and cloned cards sharing one IMSI and Ki."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ..auth_gsm import SecretKey
from ..qstate import Axis, make_named_state, z_correlation
from ..runtime import TRI_LEGS, BasisAnnounce, PartyId, derive_trial_seed
from .auth import AuthCenter, CloneOutcome, CloneVerdict, SimCredentials, login
from .rounds import RoundClass
from .session import SessionResult, TriConfig, _gc_paused, forward_key, run_session

SIM1, SIM2, AUC, SEP = PartyId.SIM1, PartyId.SIM2, PartyId.AUC, PartyId.SEP

# 40 emissions keep accidental equality of the two channel keys near 0.1%,
# and topping up to 8 bits per channel keeps every lone login valid.
DEFAULT_CONFIG = TriConfig(num_emissions=40, min_key_bits=8)

EAVESDROP_STRATEGIES = ("observe", "reconstruct")


class ScenarioKind(str, Enum):
    SOLO_LOGIN = "SoloLogin"
    SIMULTANEOUS = "Simultaneous"
    BASIS_EAVESDROP = "BasisEavesdrop"
    KEY_FORWARDING = "KeyForwarding"
    RELAY_CHANNEL = "RelayChannel"


@dataclass(frozen=True)
class TrialOutcome:
    trial: int
    seed: int
    verdict: CloneVerdict
    logins: tuple[PartyId, ...]
    emissions: int
    key_lengths: tuple[int, int]
    null_rounds: int

    @property
    def detected(self) -> bool:
        return self.verdict.clone_detected

    @property
    def accepted(self) -> bool:
        return self.verdict.value is CloneOutcome.ACCEPTED


@dataclass
class ScenarioStats:
    kind: ScenarioKind
    seed: int
    outcomes: list[TrialOutcome] = field(default_factory=list)

    @property
    def trials(self) -> int:
        return len(self.outcomes)

    def _rate(self, flag) -> float:
        return sum(1 for o in self.outcomes if flag(o)) / self.trials if self.outcomes else 0.0

    @property
    def detection_rate(self) -> float:
        return self._rate(lambda o: o.detected)

    @property
    def accept_rate(self) -> float:
        return self._rate(lambda o: o.accepted)

    def summary(self) -> dict:
        return {
            "scenario": self.kind.value,
            "seed": self.seed,
            "trials": self.trials,
            "detection_rate": self.detection_rate,
            "accept_rate": self.accept_rate,
            "mean_emissions": sum(o.emissions for o in self.outcomes) / max(1, self.trials),
            "mean_key_a": sum(o.key_lengths[0] for o in self.outcomes) / max(1, self.trials),
            "mean_key_b": sum(o.key_lengths[1] for o in self.outcomes) / max(1, self.trials),
            "null_rounds": sum(o.null_rounds for o in self.outcomes),
        }


def provision_ki(result: SessionResult) -> SecretKey:
    """Ki written to the card at issue time; the clone copies it verbatim."""
    return SecretKey(result.session.stream(AUC, "ki").uint(128))


def reconstruct_channel_a(result: SessionResult) -> str:
    """SIM2's best guess at channel A's key from tapped basis announcements.

    SIM2 sees which rounds SIM1 and the AUC both measured in Z.  Where SIM2
    also measured Z it knows SIM1's bit through the state's correlation;
    where it measured X it can only guess.  Null rounds it already shares.
    """
    tap = next(t for t in result.session.taps if t.channel == "A" and t.observer is SIM2)
    sim1_axis: dict[int, Axis] = {}
    auc_axis: dict[int, Axis] = {}
    for m in tap.copies:
        p = m.payload
        if isinstance(p, BasisAnnounce):
            (sim1_axis if m.sender is SIM1 else auc_axis)[p.round_index] = p.axis
    source = make_named_state(result.config.source_kind, TRI_LEGS)
    flip = z_correlation(source, 0, 1) < 0
    guesser = result.session.stream(SIM2, "guess")
    bits = []
    for rec in result.rounds:
        r = rec.round_index
        if rec.null_applied:
            bits.append(rec.bits[1])
        elif sim1_axis.get(r) is Axis.Z and auc_axis.get(r) is Axis.Z:
            if rec.axes[1] is Axis.Z:
                bits.append(rec.raw_bits[1] ^ flip)
            else:
                bits.append(guesser.bit())
    return "".join(str(b) for b in bits)


def run_trial(
    kind: ScenarioKind | str,
    config: TriConfig,
    trial: int = 0,
    *,
    mode: str = "a3",
    strategy: str = "observe",
) -> tuple[TrialOutcome, SessionResult]:
    kind = ScenarioKind(kind)
    if strategy not in EAVESDROP_STRATEGIES:
        raise ValueError(f"unknown eavesdrop strategy {strategy!r}")
    cfg = config.replace(
        tap_basis_a=kind is ScenarioKind.BASIS_EAVESDROP or config.tap_basis_a,
        live_relay=kind is ScenarioKind.RELAY_CHANNEL or config.live_relay,
    )
    result = run_session(cfg)
    ki = provision_ki(result)
    keys = result.auc_keys
    classes = [rec.round_class for rec in result.rounds]
    center = AuthCenter.from_session(ki, keys, classes, mode=mode)

    original = SimCredentials(ki, result.sim_keys[SIM1].bits)
    if kind is ScenarioKind.KEY_FORWARDING:
        clone = SimCredentials(ki, forward_key(result).bits)
    elif kind is ScenarioKind.RELAY_CHANNEL:
        clone = SimCredentials(ki, result.relayed.bits)
    elif kind is ScenarioKind.BASIS_EAVESDROP and strategy == "reconstruct":
        clone = SimCredentials(ki, reconstruct_channel_a(result))
    else:
        clone = SimCredentials(ki, result.sim_keys[SIM2].bits)

    if kind is ScenarioKind.SOLO_LOGIN:
        lone = SIM1 if result.session.stream(SEP, "scenario").bit() == 0 else SIM2
        cards = {lone: original if lone is SIM1 else clone}
    else:
        cards = {SIM1: original, SIM2: clone}
    verdict = login(result.session, center, cards)

    outcome = TrialOutcome(
        trial=trial,
        seed=cfg.seed,
        verdict=verdict,
        logins=tuple(cards),
        emissions=result.emissions,
        key_lengths=(len(keys.qk_a), len(keys.qk_b)),
        null_rounds=sum(1 for rec in result.rounds if rec.round_class is RoundClass.NULL_GRAY),
    )
    return outcome, result


def run_scenario(
    kind: ScenarioKind | str,
    trials: int,
    seed: int,
    config: TriConfig | None = None,
    *,
    mode: str = "a3",
    strategy: str = "observe",
) -> ScenarioStats:
    """Run ``trials`` independent sessions, each seeded from (seed, trial index)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    kind = ScenarioKind(kind)
    base = DEFAULT_CONFIG if config is None else config
    stats = ScenarioStats(kind, seed)
    with _gc_paused():
        for t in range(trials):
            cfg = base.replace(seed=derive_trial_seed(seed, t))
            outcome, _ = run_trial(kind, cfg, t, mode=mode, strategy=strategy)
            stats.outcomes.append(outcome)
    return stats


__all__ = [
    "DEFAULT_CONFIG",
    "EAVESDROP_STRATEGIES",
    "ScenarioKind",
    "ScenarioStats",
    "TrialOutcome",
    "provision_ki",
    "reconstruct_channel_a",
    "run_scenario",
    "run_trial",
]
