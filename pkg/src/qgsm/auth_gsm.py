"""Classical GSM challenge-response authentication and the A3 contract.

Widths follow GSM: Ki and RAND are 128-bit, A3 outputs 32 bits.  Short binary
literals such as ``"0110"`` are zero-extended into the 128-bit field, which is
also how sifted quantum keys enter A3.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

from .runtime import (
    Decision,
    ImsiRequest,
    PartyId,
    RandIssue,
    ResSubmission,
    Session,
    Verdict,
    classical_send,
)

MASK_32 = (1 << 32) - 1
MASK_128 = (1 << 128) - 1

_IMSI_RE = re.compile(r"[0-9]{6,15}")

DEFAULT_IMSI = "432111234567890"


@dataclass(frozen=True, slots=True)
class Imsi:
    digits: str

    def __post_init__(self) -> None:
        if not isinstance(self.digits, str) or not _IMSI_RE.fullmatch(self.digits):
            raise ValueError(f"IMSI must be 6-15 decimal digits, got {self.digits!r}")

    @staticmethod
    def is_valid(digits: str) -> bool:
        return isinstance(digits, str) and _IMSI_RE.fullmatch(digits) is not None


@dataclass(frozen=True, slots=True)
class SecretKey:
    """Ki, or a quantum key QK_j zero-extended to 128 bits."""

    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value <= MASK_128:
            raise ValueError("secret key must fit in 128 bits")

    @classmethod
    def from_bits(cls, bits: str) -> "SecretKey":
        """Zero-extend a bit string; keys longer than 128 bits keep their last 128."""
        if bits and set(bits) - {"0", "1"}:
            raise ValueError(f"not a bit string: {bits!r}")
        return cls(int(bits, 2) & MASK_128 if bits else 0)


@dataclass(frozen=True, slots=True)
class RandChallenge:
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value <= MASK_128:
            raise ValueError("RAND must fit in 128 bits")


@dataclass(frozen=True, slots=True)
class AuthResponse:
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value <= MASK_32:
            raise ValueError("A3 responses are 32-bit")


A3 = Callable[[SecretKey, RandChallenge], AuthResponse]


def a3_default(key: SecretKey, rand: RandChallenge) -> AuthResponse:
    """Toy A3: 128-bit modular sum, truncated to the low 32 bits."""
    return AuthResponse(((key.value + rand.value) & MASK_128) & MASK_32)


def issue_rand(session: Session) -> RandChallenge:
    return RandChallenge(session.stream(PartyId.AUC, "rand").uint(128))


def classical_authenticate(
    session: Session,
    sim_key: SecretKey,
    network_key: SecretKey,
    imsi: str = DEFAULT_IMSI,
    a3: A3 = a3_default,
    sim: PartyId = PartyId.SIM1,
) -> Decision:
    """Run the five-step GSM exchange and return the AUC's decision.

    Transcript order: IMSI request, RES computed at the AUC, RAND issued,
    XRES computed on the SIM, XRES submitted and compared.
    """
    session.require(sim)
    auc = PartyId.AUC
    classical_send(session, sim, auc, ImsiRequest(imsi))
    if not Imsi.is_valid(imsi):
        decision = Decision(Verdict.REJECT, "MalformedImsi")
        classical_send(session, auc, sim, decision)
        return decision

    rand = issue_rand(session)
    res = a3(network_key, rand)
    session.log_local(auc, "compute_RES", res.value)
    classical_send(session, auc, sim, RandIssue(rand.value))

    xres = a3(sim_key, rand)
    session.log_local(sim, "compute_XRES", xres.value)
    # RES/XRES only travel in the classical-only flow; qres_j is unused here.
    classical_send(session, sim, auc, ResSubmission(imsi, xres.value, 0))

    if xres == res:
        decision = Decision(Verdict.ACCEPT)
    else:
        decision = Decision(Verdict.REJECT, "ResMismatch")
    classical_send(session, auc, sim, decision)
    return decision
