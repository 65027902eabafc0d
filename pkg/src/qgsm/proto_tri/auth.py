"""Quantum-augmented login: (Ki, QK_j) responses and dual-login clone detection."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from ..auth_gsm import (
    A3,
    DEFAULT_IMSI,
    Imsi,
    RandChallenge,
    SecretKey,
    a3_default,
    issue_rand,
)
from ..runtime import (
    Decision,
    ImsiRequest,
    PartyId,
    RandIssue,
    ResSubmission,
    Session,
    Verdict,
    classical_send,
)
from .rounds import ChannelKeys, RoundClass

DEFAULT_MIN_KEY_BITS = 8
DETECTION_MODES = ("a3", "keys", "single_channel")


class CloneOutcome(str, Enum):
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"
    CLONE_DETECTED = "CloneDetected"


@dataclass(frozen=True)
class CloneVerdict:
    """Outcome of one login attempt (one or two simultaneous submissions).

    ``evidence`` is ``(res_i values, qres_j values)`` in submission order.
    """

    value: CloneOutcome
    evidence: tuple[tuple[int, ...], tuple[int, ...]]
    reason: str = ""

    def __post_init__(self) -> None:
        if self.value is CloneOutcome.CLONE_DETECTED:
            res, qres = self.evidence
            if len(res) != 2 or res[0] != res[1] or qres[0] == qres[1]:
                raise ValueError("CloneDetected needs equal res_i and differing qres_j")

    @property
    def clone_detected(self) -> bool:
        return self.value is CloneOutcome.CLONE_DETECTED


@dataclass(frozen=True)
class QuantumAuthResult:
    """Network pair (RES_i, QRES_j), SIM pair (XRES_i, QXRES_j) and the decision."""

    network: tuple[int, int] | None
    sim: tuple[int, int] | None
    decision: Decision


def _key_too_short(bits: str, min_key_bits: int) -> bool:
    return len(bits) < max(1, min_key_bits)


def quantum_authenticate(
    sim_id: PartyId | str,
    channel_key: str,
    ki: SecretKey,
    rand: RandChallenge,
    a3: A3 = a3_default,
    *,
    sim_key: str | None = None,
    sim_ki: SecretKey | None = None,
    min_key_bits: int = DEFAULT_MIN_KEY_BITS,
) -> QuantumAuthResult:
    """Apply A3 separately to Ki and to the channel key on both sides.

    ``channel_key`` and ``ki`` are the network's records; ``sim_key`` and
    ``sim_ki`` default to them (an honest SIM).
    """
    PartyId(sim_id)
    sim_key = channel_key if sim_key is None else sim_key
    sim_ki = ki if sim_ki is None else sim_ki
    if _key_too_short(channel_key, min_key_bits) or _key_too_short(sim_key, min_key_bits):
        return QuantumAuthResult(None, None, Decision(Verdict.REJECT, "InsufficientKey"))
    network = (a3(ki, rand).value, a3(SecretKey.from_bits(channel_key), rand).value)
    sim = (a3(sim_ki, rand).value, a3(SecretKey.from_bits(sim_key), rand).value)
    if network == sim:
        decision = Decision(Verdict.ACCEPT)
    elif network[0] != sim[0]:
        decision = Decision(Verdict.REJECT, "ResMismatch")
    else:
        decision = Decision(Verdict.REJECT, "QresMismatch")
    return QuantumAuthResult(network, sim, decision)


def detect_clone(
    first: ResSubmission,
    second: ResSubmission,
    resolve=None,
) -> CloneVerdict:
    """Compare two simultaneous submissions for one IMSI.

    Equal ``res_i`` with differing ``qres_j`` is the clone signature.  With
    ``resolve`` (a map from a submission to the set of stored keys it
    matches) the keys behind the two responses must also differ.  Without it,
    identical submissions are ``Accepted`` and anything else ``Rejected``.
    """
    if first.imsi != second.imsi:
        raise ValueError("clone detection compares submissions for one IMSI")
    evidence = ((first.res_i, second.res_i), (first.qres_j, second.qres_j))
    if first.res_i == second.res_i and first.qres_j != second.qres_j:
        if resolve is None or resolve(first) != resolve(second):
            return CloneVerdict(CloneOutcome.CLONE_DETECTED, evidence, "QresDiffer")
    if resolve is None:
        if (first.res_i, first.qres_j) == (second.res_i, second.qres_j):
            return CloneVerdict(CloneOutcome.ACCEPTED, evidence)
        return CloneVerdict(CloneOutcome.REJECTED, evidence, "ResMismatch")
    if resolve(first) and resolve(second):
        return CloneVerdict(CloneOutcome.ACCEPTED, evidence)
    return CloneVerdict(CloneOutcome.REJECTED, evidence, "UnknownResponse")


def exclusive_key(keys: ChannelKeys, classes: Sequence[RoundClass], channel: str) -> str:
    """The part of a channel key that came from single-channel rounds."""
    bits = keys.key(channel)
    return "".join(b for b, r in zip(bits, keys.rounds(channel)) if classes[r].single_channel)


@dataclass
class AuthCenter:
    """Network-side records for one subscriber and the login decision logic.

    The AUC holds Ki plus the key it sifted on every channel opened under this
    IMSI.  It cannot tell which physical card sends a response, so each
    submission is resolved to the stored keys whose A3 output it matches.

    ``mode`` selects the clone test: ``"a3"`` compares responses only,
    ``"keys"`` also requires the resolved key strings to differ, and
    ``"single_channel"`` requires their Blue/Yellow-round parts to differ.
    """

    ki: SecretKey
    channel_keys: Mapping[str, str]
    imsi: str = DEFAULT_IMSI
    a3: A3 = a3_default
    min_key_bits: int = DEFAULT_MIN_KEY_BITS
    mode: str = "a3"
    exclusive_keys: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in DETECTION_MODES:
            raise ValueError(f"unknown detection mode {self.mode!r}; expected one of {DETECTION_MODES}")
        if self.mode == "single_channel" and set(self.exclusive_keys) != set(self.channel_keys):
            raise ValueError("single_channel mode needs exclusive keys for every channel")
        Imsi(self.imsi)

    @classmethod
    def from_session(cls, ki: SecretKey, keys: ChannelKeys, classes: Sequence[RoundClass] = (), **kw):
        exclusive = {}
        if classes:
            exclusive = {ch: exclusive_key(keys, classes, ch) for ch in ("A", "B")}
        return cls(ki, {"A": keys.qk_a, "B": keys.qk_b}, exclusive_keys=exclusive, **kw)

    def expected_res(self, rand: RandChallenge) -> int:
        return self.a3(self.ki, rand).value

    def resolve(self, sub: ResSubmission, rand: RandChallenge) -> frozenset[str]:
        """Channels whose stored key yields ``sub.qres_j`` under ``rand``."""
        return frozenset(
            ch
            for ch, bits in self.channel_keys.items()
            if not _key_too_short(bits, self.min_key_bits)
            and self.a3(SecretKey.from_bits(bits), rand).value == sub.qres_j
        )

    def _identity(self, sub: ResSubmission, rand: RandChallenge):
        channels = self.resolve(sub, rand)
        if self.mode == "keys":
            return frozenset(self.channel_keys[ch] for ch in channels)
        if self.mode == "single_channel":
            return frozenset(self.exclusive_keys[ch] for ch in channels)
        return channels

    def verify(self, sub: ResSubmission, rand: RandChallenge) -> Decision:
        if sub.imsi != self.imsi:
            return Decision(Verdict.REJECT, "UnknownImsi")
        if all(_key_too_short(k, self.min_key_bits) for k in self.channel_keys.values()):
            return Decision(Verdict.REJECT, "InsufficientKey")
        if sub.res_i != self.expected_res(rand):
            return Decision(Verdict.REJECT, "ResMismatch")
        if not self.resolve(sub, rand):
            return Decision(Verdict.REJECT, "QresMismatch")
        return Decision(Verdict.ACCEPT)

    def adjudicate(self, subs: Sequence[ResSubmission], rand: RandChallenge) -> CloneVerdict:
        """Decide a login round with one or two submissions under one RAND."""
        subs = list(subs)
        evidence = (tuple(s.res_i for s in subs), tuple(s.qres_j for s in subs))
        if len(subs) == 1:
            decision = self.verify(subs[0], rand)
            if decision.accepted:
                return CloneVerdict(CloneOutcome.ACCEPTED, evidence)
            return CloneVerdict(CloneOutcome.REJECTED, evidence, decision.reason)
        if len(subs) != 2:
            raise ValueError("a login round carries one or two submissions")
        first, second = subs
        if first.imsi != second.imsi:
            raise ValueError("simultaneous logins must share the IMSI")
        if self.mode == "a3":
            verdict = detect_clone(first, second)
        else:
            verdict = detect_clone(first, second, resolve=lambda s: self._identity(s, rand))
        if verdict.clone_detected:
            return verdict
        decisions = [self.verify(s, rand) for s in subs]
        if all(d.accepted for d in decisions):
            return CloneVerdict(CloneOutcome.ACCEPTED, evidence)
        reason = next(d.reason for d in decisions if not d.accepted)
        return CloneVerdict(CloneOutcome.REJECTED, evidence, reason)


@dataclass(frozen=True)
class SimCredentials:
    """What a card holds: Ki and its sifted quantum key."""

    ki: SecretKey
    key_bits: str


def login(
    session: Session,
    center: AuthCenter,
    cards: Mapping[PartyId, SimCredentials],
    rand: RandChallenge | None = None,
) -> CloneVerdict:
    """One login round: every card in ``cards`` requests access under one RAND.

    Each card requests with the shared IMSI, receives RAND, submits
    (XRES_i, QXRES_j), and then receives its decision.  A detected clone
    rejects every card in the round.
    """
    for sim in cards:
        session.require(sim)
    auc = PartyId.AUC
    for sim in cards:
        classical_send(session, sim, auc, ImsiRequest(center.imsi))
    if rand is None:
        rand = issue_rand(session)
    session.log_local(auc, "compute_RES_QRES")
    for sim in cards:
        classical_send(session, auc, sim, RandIssue(rand.value))
    subs = []
    for sim, card in cards.items():
        xres = center.a3(card.ki, rand).value
        qxres = center.a3(SecretKey.from_bits(card.key_bits), rand).value
        session.log_local(sim, "compute_XRES_QXRES")
        sub = ResSubmission(center.imsi, xres, qxres)
        classical_send(session, sim, auc, sub)
        subs.append(sub)
    verdict = center.adjudicate(subs, rand)
    accepted = verdict.value is CloneOutcome.ACCEPTED
    for sim in cards:
        decision = Decision(Verdict.ACCEPT) if accepted else Decision(Verdict.REJECT, verdict.reason or verdict.value.value)
        classical_send(session, auc, sim, decision)
    return verdict


__all__ = [
    "AuthCenter",
    "CloneOutcome",
    "CloneVerdict",
    "DEFAULT_MIN_KEY_BITS",
    "DETECTION_MODES",
    "QuantumAuthResult",
    "SimCredentials",
    "detect_clone",
    "exclusive_key",
    "login",
    "quantum_authenticate",
]
