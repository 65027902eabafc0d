"""Key distribution sessions for the three-party protocol."""

from __future__ import annotations

import dataclasses
import gc
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Sequence

from ..qstate import Axis, NamedState, make_named_state
from ..runtime import (
    TRI_LEGS,
    BasisAnnounce,
    EveTransform,
    KeyRelay,
    NullMessage,
    PartyId,
    Session,
    SessionError,
    classical_send,
    open_session,
    quantum_deliver,
)
from .rounds import ChannelKeys, RoundClass, RoundRecord, SimKey, classify_round, null_adjust, reconcile_state_correlations

SIM1, SIM2, AUC, SEP, EVE = PartyId.SIM1, PartyId.SIM2, PartyId.AUC, PartyId.SEP, PartyId.EVE
X, Z = Axis.X, Axis.Z

# Default measurement sequence: the AUC measures first.
AUC_FIRST_ORDER = (AUC, SIM1, SIM2)

_LEG_INDEX = {SIM1: 0, SIM2: 1, AUC: 2}
NULL_GRAY = RoundClass.NULL_GRAY
_FEEDS_A = frozenset(c for c in RoundClass if c.feeds_a)
_FEEDS_B = frozenset(c for c in RoundClass if c.feeds_b)
_EVE_LEGS = {"A": SIM1, "B": SIM2}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TriConfig:
    """Session settings.

    ``basis_policy`` is ``"uniform"``, ``"all_z"``, ``"all_x"``, or a list of
    three-letter schedules in (SIM1, SIM2, AUC) order such as ``["ZXZ"]``,
    cycled over rounds.  ``order_policy`` is ``"fixed"`` (AUC, SIM1, SIM2),
    ``"random"`` or an explicit list of party names.

    With ``min_key_bits > 0`` the session keeps emitting past
    ``num_emissions`` until both channel keys reach that length.
    """

    source_kind: NamedState = NamedState.GHZ3
    num_emissions: int = 40
    basis_policy: str | tuple[str, ...] = "uniform"
    order_policy: str | tuple[str, ...] = "fixed"
    seed: int = 0
    eve: str | None = None
    literal_w_flip: bool = False
    min_key_bits: int = 0
    max_emissions: int | None = None
    tap_basis_a: bool = False
    live_relay: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "source_kind", NamedState(self.source_kind))
        if self.source_kind is NamedState.BELL_PHI_PLUS:
            raise ConfigError("three-party sessions need GHZ3 or W_PAPER; use run_e91_reference for pairs")
        if self.num_emissions < 1:
            raise ConfigError("num_emissions must be >= 1")
        if not isinstance(self.basis_policy, str):
            object.__setattr__(self, "basis_policy", tuple(self.basis_policy))
            for triple in self.basis_policy:
                if len(triple) != 3 or set(triple) - {"X", "Z"}:
                    raise ConfigError(f"bad basis schedule entry {triple!r}")
        elif self.basis_policy not in ("uniform", "all_z", "all_x"):
            raise ConfigError(f"unknown basis_policy {self.basis_policy!r}")
        if not isinstance(self.order_policy, str):
            order = tuple(PartyId(p) for p in self.order_policy)
            if sorted(order) != sorted(TRI_LEGS):
                raise ConfigError("explicit order must list SIM1, SIM2 and AUC once each")
            object.__setattr__(self, "order_policy", order)
        elif self.order_policy not in ("fixed", "random"):
            raise ConfigError(f"unknown order_policy {self.order_policy!r}")
        if self.eve is not None and self.eve not in _EVE_LEGS:
            raise ConfigError(
                f"Eve taps exactly one channel ('A' or 'B'); got {self.eve!r}"
            )

    def replace(self, **changes) -> "TriConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class SessionResult:
    config: TriConfig
    session: Session
    rounds: list[RoundRecord]
    auc_keys: ChannelKeys
    sim_keys: dict[PartyId, SimKey]
    eve_bits: dict[int, int] = field(default_factory=dict)
    relayed: SimKey | None = None

    @property
    def transcript(self):
        return self.session.transcript

    @property
    def emissions(self) -> int:
        return len(self.rounds)


def _schedule_axes(policy, r: int) -> tuple[Axis, Axis, Axis]:
    triple = policy[r % len(policy)]
    return Axis(triple[0]), Axis(triple[1]), Axis(triple[2])


_GC_PAUSE_ROUNDS = 2000


@contextmanager
def _gc_paused():
    # Sessions allocate many small acyclic event objects; generational sweeps
    # over the growing transcript dominate long runs otherwise.  Anything
    # cyclic left behind is swept once at the end.
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()
            gc.collect()


def run_session(config: TriConfig) -> SessionResult:
    """Emit, measure, announce bases, reconcile and accumulate both channel keys."""
    if config.num_emissions < _GC_PAUSE_ROUNDS:
        return _run_session(config)
    with _gc_paused():
        return _run_session(config)


def _run_session(config: TriConfig) -> SessionResult:
    topology = [SEP, SIM1, SIM2, AUC] + ([EVE] if config.eve else [])
    session = open_session(topology, config.seed)
    source = make_named_state(config.source_kind, TRI_LEGS)
    signs = reconcile_state_correlations(config.source_kind, literal=config.literal_w_flip)
    flip_a = signs["A"] < 0
    flip_b = signs["B"] < 0

    basis_rng = {p: session.stream(p, "basis") for p in TRI_LEGS}
    measure_rng = {p: session.stream(p, "measure") for p in TRI_LEGS}
    order_rng = session.stream(SEP, "order")

    eve = None
    eve_tap = None
    if config.eve:
        leg = _EVE_LEGS[config.eve]
        eve = EveTransform(leg)
        eve_tap = session.add_tap(config.eve, EVE, (BasisAnnounce,))
        measure_rng[EVE] = session.stream(EVE, "measure")
    if config.tap_basis_a:
        session.add_tap("A", SIM2, (BasisAnnounce,))

    policy = config.basis_policy
    max_emissions = config.max_emissions or 100 * config.num_emissions + 1000
    min_bits = config.min_key_bits
    live_relay = config.live_relay
    fixed_order = None
    if config.order_policy == "fixed":
        fixed_order = AUC_FIRST_ORDER
    elif config.order_policy != "random":
        fixed_order = config.order_policy
    fixed_axes = {"all_z": (Z, Z, Z), "all_x": (X, X, X)}.get(policy) if isinstance(policy, str) else None
    rng1, rng2, rng3 = basis_rng[SIM1], basis_rng[SIM2], basis_rng[AUC]
    send = classical_send

    rounds: list[RoundRecord] = []
    qk_a: list[int] = []
    qk_b: list[int] = []
    rounds_a: list[int] = []
    rounds_b: list[int] = []
    sim1_bits: list[int] = []
    sim2_bits: list[int] = []
    sim1_rounds: list[int] = []
    sim2_rounds: list[int] = []
    eve_bits: dict[int, int] = {}
    relay_bits: list[int] = []
    relay_rounds: list[int] = []

    r = 0
    while r < max_emissions:
        if r >= config.num_emissions and len(qk_a) >= min_bits and len(qk_b) >= min_bits:
            break
        handles = quantum_deliver(session, source, TRI_LEGS, eve, round_index=r)

        if fixed_axes is not None:
            axes = fixed_axes
        elif policy == "uniform":
            axes = (rng1.axis(), rng2.axis(), rng3.axis())
        else:
            axes = _schedule_axes(policy, r)
        a1, a2, a3 = axes

        order = fixed_order if fixed_order is not None else order_rng.shuffled(AUC_FIRST_ORDER)
        raw = [0, 0, 0]
        for party in order:
            i = _LEG_INDEX[party]
            raw[i] = handles[party].measure(axes[i], measure_rng[party]).classical_bit
        b1, b2, b3 = raw

        send(session, SIM1, AUC, BasisAnnounce(r, a1))
        send(session, SIM2, AUC, BasisAnnounce(r, a2))
        auc_announce = BasisAnnounce(r, a3)
        send(session, AUC, SIM1, auc_announce)
        send(session, AUC, SIM2, auc_announce)

        if eve is not None:
            # Eve waits for the tapped SIM's disclosed basis before reading her ancilla.
            leg_axis = next(m.payload.axis for m in reversed(eve_tap.copies) if m.sender is eve.leg)
            eve_bits[r] = handles[EVE].measure(leg_axis, measure_rng[EVE]).classical_bit

        cls = classify_round(axes)
        null = cls is NULL_GRAY
        if null:
            notice = NullMessage(r, b3)
            send(session, AUC, SIM1, notice)
            send(session, AUC, SIM2, notice)
            s1, s2 = null_adjust(b3, b1), null_adjust(b3, b2)
        else:
            s1, s2 = b1, b2

        # SIM side: keep on a shared Z basis with the AUC, or after a Null message.
        if null or (a1 is Z and a3 is Z):
            sim1_bits.append(s1)
            sim1_rounds.append(r)
            if live_relay:
                send(session, SIM1, SIM2, KeyRelay((r,), (s1,)))
                relay_bits.append(s1)
                relay_rounds.append(r)
        if null or (a2 is Z and a3 is Z):
            sim2_bits.append(s2)
            sim2_rounds.append(r)

        # AUC side.
        if cls in _FEEDS_A:
            qk_a.append(b3 if null else b3 ^ flip_a)
            rounds_a.append(r)
        if cls in _FEEDS_B:
            qk_b.append(b3 if null else b3 ^ flip_b)
            rounds_b.append(r)

        rounds.append(RoundRecord(r, axes, (b1, b2, b3), (s1, s2, b3), cls, null))
        r += 1

    sim_bits = {SIM1: sim1_bits, SIM2: sim2_bits}
    sim_rounds = {SIM1: sim1_rounds, SIM2: sim2_rounds}
    auc_keys = ChannelKeys(_bits(qk_a), _bits(qk_b), tuple(rounds_a), tuple(rounds_b))
    sim_keys = {p: SimKey(_bits(sim_bits[p]), tuple(sim_rounds[p])) for p in (SIM1, SIM2)}
    relayed = SimKey(_bits(relay_bits), tuple(relay_rounds)) if config.live_relay else None
    return SessionResult(config, session, rounds, auc_keys, sim_keys, eve_bits, relayed)


def _bits(bits: Sequence[int]) -> str:
    return "".join("1" if b else "0" for b in bits)


def forward_key(result: SessionResult) -> SimKey:
    """SIM1 sends its whole sifted key to SIM2 over the inter-SIM relay."""
    key = result.sim_keys[SIM1]
    classical_send(
        result.session, SIM1, SIM2, KeyRelay(key.rounds, tuple(int(b) for b in key.bits))
    )
    return key


__all__ = [
    "ConfigError",
    "AUC_FIRST_ORDER",
    "SessionError",
    "SessionResult",
    "TriConfig",
    "forward_key",
    "run_session",
]
