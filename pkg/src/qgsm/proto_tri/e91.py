"""Two-party E91-style reference: Bell pairs, basis sifting, partial disclosure."""

from __future__ import annotations

from dataclasses import dataclass

from ..qstate import Axis, NamedState, make_named_state
from ..runtime import BasisAnnounce, KeyRelay, PartyId, Session, classical_send, open_session, quantum_deliver

ALICE, BOB = PartyId.SIM1, PartyId.AUC
_POLICIES = {"uniform": None, "all_z": Axis.Z, "all_x": Axis.X}


@dataclass(frozen=True)
class E91Result:
    alice_key: str
    bob_key: str
    sifted_rounds: tuple[int, ...]
    disclosed_rounds: tuple[int, ...]
    disclosed_alice: str
    disclosed_bob: str
    session: Session

    @property
    def sifted_length(self) -> int:
        return len(self.sifted_rounds)

    @property
    def keys_match(self) -> bool:
        return self.alice_key == self.bob_key


def run_e91_reference(
    num_pairs: int,
    seed: int,
    disclosure_fraction: float = 0.0,
    basis_policy: str = "uniform",
) -> E91Result:
    """Share ``num_pairs`` Bell pairs, sift on matching bases, disclose a sample.

    Bases are announced without results.  A random ``disclosure_fraction`` of
    the sifted rounds is compared in the open and dropped from the key.
    """
    if num_pairs < 1:
        raise ValueError("num_pairs must be >= 1")
    if not 0.0 <= disclosure_fraction <= 1.0:
        raise ValueError("disclosure_fraction must lie in [0, 1]")
    if basis_policy not in _POLICIES:
        raise ValueError(f"unknown basis_policy {basis_policy!r}")
    fixed = _POLICIES[basis_policy]
    session = open_session([PartyId.SEP, ALICE, BOB], seed)
    pair = make_named_state(NamedState.BELL_PHI_PLUS, (ALICE, BOB))
    basis = {p: session.stream(p, "basis") for p in (ALICE, BOB)}
    meas = {p: session.stream(p, "measure") for p in (ALICE, BOB)}

    sifted: list[int] = []
    alice_bits: list[int] = []
    bob_bits: list[int] = []
    for r in range(num_pairs):
        handles = quantum_deliver(session, pair, (ALICE, BOB), round_index=r)
        axes = {p: fixed or basis[p].axis() for p in (ALICE, BOB)}
        bits = {p: handles[p].measure(axes[p], meas[p]).classical_bit for p in (ALICE, BOB)}
        classical_send(session, ALICE, BOB, BasisAnnounce(r, axes[ALICE]))
        classical_send(session, BOB, ALICE, BasisAnnounce(r, axes[BOB]))
        if axes[ALICE] is axes[BOB]:
            sifted.append(r)
            alice_bits.append(bits[ALICE])
            bob_bits.append(bits[BOB])

    k = round(disclosure_fraction * len(sifted))
    picks = sorted(session.stream(BOB, "disclose").generator.choice(len(sifted), size=k, replace=False).tolist())
    disclosed = tuple(sifted[i] for i in picks)
    shown_a = tuple(alice_bits[i] for i in picks)
    shown_b = tuple(bob_bits[i] for i in picks)
    if k:
        classical_send(session, BOB, ALICE, KeyRelay(disclosed, shown_b))
        classical_send(session, ALICE, BOB, KeyRelay(disclosed, shown_a))
    hidden = set(picks)
    keep = [i for i in range(len(sifted)) if i not in hidden]
    return E91Result(
        alice_key="".join(str(alice_bits[i]) for i in keep),
        bob_key="".join(str(bob_bits[i]) for i in keep),
        sifted_rounds=tuple(sifted),
        disclosed_rounds=disclosed,
        disclosed_alice="".join(map(str, shown_a)),
        disclosed_bob="".join(map(str, shown_b)),
        session=session,
    )


__all__ = ["E91Result", "run_e91_reference"]
