"""Parties, channels, transcripts and seeded randomness shared by all protocols.

A :class:`Session` owns the transcript and hands out :class:`RngStream`
objects keyed by ``(master_seed, party, purpose, counter)``.  Every classical
message and every measurement is appended to the transcript with a global,
strictly increasing sequence number, so re-running a session with the same
seed reproduces its JSON Lines export byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
import zlib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from collections.abc import Iterable, Mapping, Sequence
from typing import Any, NamedTuple

import numpy as np

from . import qstate
from .qstate import Axis, MeasurementRecord, StateVector

_BLOCK = 2048
_TRIAL_TAG = 0x7472_6961  # "tria"


class PartyId(str, Enum):
    SEP = "SEP"
    SIM1 = "SIM1"
    SIM2 = "SIM2"
    AUC = "AUC"
    EVE = "EVE"


_PARTY_CODES = {p: i for i, p in enumerate(PartyId)}

# Fixed leg order of the three-party states: |ijk> = (SIM1, SIM2, AUC).
TRI_LEGS = (PartyId.SIM1, PartyId.SIM2, PartyId.AUC)

CHANNELS: dict[frozenset, str] = {
    frozenset({PartyId.SIM1, PartyId.AUC}): "A",
    frozenset({PartyId.SIM2, PartyId.AUC}): "B",
    frozenset({PartyId.SIM1, PartyId.SIM2}): "relay",
}


class SessionError(ValueError):
    pass


_CHANNEL_PAIRS = {
    (a, b): name for pair, name in CHANNELS.items() for a in pair for b in pair if a is not b
}


def channel_of(a: PartyId, b: PartyId) -> str:
    """Name of the classical channel between two parties ("A", "B", "relay", ...)."""
    name = _CHANNEL_PAIRS.get((a, b))
    if name is None:
        a, b = PartyId(a), PartyId(b)
        name = CHANNELS.get(frozenset({a, b}), f"{a.value}-{b.value}")
    return name


def _tag_code(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def seed_sequence(master_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master_seed) & (2**64 - 1), spawn_key=tuple(key))


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """64-bit seed for Monte Carlo trial ``trial_index``."""
    lo, hi = seed_sequence(master_seed, _TRIAL_TAG, trial_index).generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


class RngStream:
    """Reproducible random stream for one (party, purpose, counter).

    Scalar draws come from a pre-drawn block so per-call overhead stays low;
    ``generator`` exposes the underlying numpy Generator for vectorized use.
    """

    __slots__ = ("derivation", "generator", "_buf", "_pos")

    def __init__(self, master_seed: int, party: PartyId | str, purpose: str, counter: int = 0):
        party = PartyId(party)
        self.derivation = (int(master_seed), party, purpose, int(counter))
        ss = seed_sequence(master_seed, _PARTY_CODES[party], _tag_code(purpose), int(counter))
        self.generator = np.random.Generator(np.random.PCG64(ss))
        self._buf: list[float] = []
        self._pos = 0

    def random(self) -> float:
        if self._pos >= len(self._buf):
            # Blocks grow so short-lived streams stay cheap; the drawn sequence
            # does not depend on block size.
            self._buf = self.generator.random(min(max(2 * len(self._buf), 32), _BLOCK)).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def bit(self) -> int:
        return 1 if self.random() < 0.5 else 0

    def axis(self) -> Axis:
        """Uniform choice between the protocol axes X and Z."""
        return Axis.X if self.random() < 0.5 else Axis.Z

    def below(self, n: int) -> int:
        return min(int(self.random() * n), n - 1)

    def shuffled(self, items: Sequence) -> list:
        items = list(items)
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def uint(self, bits: int) -> int:
        nbytes = (bits + 7) // 8
        return int.from_bytes(self.generator.bytes(nbytes), "big") & ((1 << bits) - 1)


# ---------------------------------------------------------------------------
# Classical message vocabulary.  Payload fields are restricted to classical
# data (ints, strings, enums, tuples of those); see _check_classical.


class Verdict(str, Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"


@dataclass(frozen=True, slots=True)
class ImsiRequest:
    imsi: str


@dataclass(frozen=True, slots=True)
class RandIssue:
    rand: int


@dataclass(frozen=True, slots=True)
class BasisAnnounce:
    round_index: int
    axis: Axis


@dataclass(frozen=True, slots=True)
class NullMessage:
    round_index: int
    auc_bit: int


@dataclass(frozen=True, slots=True)
class WindowRequest:
    n: int
    m: int

    @property
    def positions(self) -> range:
        return range(self.n + 1, self.n + self.m + 1)


@dataclass(frozen=True, slots=True)
class BasisReport:
    positions: tuple[int, ...]
    axes: tuple[Axis, ...]
    bits: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class ResSubmission:
    imsi: str
    res_i: int
    qres_j: int


@dataclass(frozen=True, slots=True)
class KeyRelay:
    round_indices: tuple[int, ...]
    bits: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class Decision:
    verdict: Verdict
    reason: str = ""

    @property
    def accepted(self) -> bool:
        return self.verdict is Verdict.ACCEPT


PAYLOAD_TYPES = (
    ImsiRequest,
    RandIssue,
    BasisAnnounce,
    NullMessage,
    WindowRequest,
    BasisReport,
    ResSubmission,
    KeyRelay,
    Decision,
)

_SCALARS = (int, str, Enum)
_FAST_SCALARS = frozenset({int, str, bool, Axis, Verdict})
_FIELDS = {t: tuple(f.name for f in dataclasses.fields(t)) for t in PAYLOAD_TYPES}


def _check_classical(payload: Any) -> None:
    names = _FIELDS.get(type(payload))
    if names is None:
        raise TypeError(f"not a classical payload: {type(payload).__name__}")
    for name in names:
        value = getattr(payload, name)
        if type(value) in _FAST_SCALARS:
            continue
        values = value if isinstance(value, tuple) else (value,)
        for v in values:
            if type(v) not in _FAST_SCALARS and not isinstance(v, _SCALARS):
                raise TypeError(f"{type(payload).__name__}.{name} carries non-classical data")


# ---------------------------------------------------------------------------
# Transcript events


class ClassicalMessage(NamedTuple):
    seq: int
    sender: PartyId
    receiver: PartyId
    payload: Any


class MeasurementEvent(NamedTuple):
    seq: int
    party: Any
    round_index: int
    record: MeasurementRecord


class LocalEvent(NamedTuple):
    """A party-internal protocol step (e.g. computing RES) with no message."""

    seq: int
    party: PartyId
    action: str
    value: int | None = None


def _jsonable(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


def event_to_dict(event: Any) -> dict:
    if isinstance(event, ClassicalMessage):
        payload = event.payload
        body = {name: _jsonable(getattr(payload, name)) for name in _FIELDS[type(payload)]}
        return {
            "seq": event.seq,
            "kind": "message",
            "sender": event.sender.value,
            "receiver": event.receiver.value,
            "payload": {"type": type(event.payload).__name__, **body},
        }
    if isinstance(event, MeasurementEvent):
        rec = event.record
        return {
            "seq": event.seq,
            "kind": "measurement",
            "sender": _jsonable(event.party),
            "receiver": None,
            "payload": {
                "round": event.round_index,
                "qubit": rec.qubit_index,
                "axis": rec.axis.value,
                "sign": rec.outcome_sign.value,
                "bit": rec.classical_bit,
            },
        }
    if isinstance(event, LocalEvent):
        return {
            "seq": event.seq,
            "kind": "local",
            "sender": event.party.value,
            "receiver": None,
            "payload": {"action": event.action, "value": event.value},
        }
    raise TypeError(f"unknown transcript event {event!r}")


@dataclass
class Transcript:
    master_seed: int
    events: list = field(default_factory=list)

    def messages(self, payload_type: type | None = None) -> list[ClassicalMessage]:
        return [
            e
            for e in self.events
            if isinstance(e, ClassicalMessage)
            and (payload_type is None or isinstance(e.payload, payload_type))
        ]

    def measurements(self) -> list[MeasurementEvent]:
        return [e for e in self.events if isinstance(e, MeasurementEvent)]

    def iter_jsonl(self) -> Iterable[str]:
        for e in self.events:
            yield json.dumps(event_to_dict(e), sort_keys=True, separators=(",", ":"))

    def to_jsonl(self) -> str:
        return "".join(line + "\n" for line in self.iter_jsonl())

    def write_jsonl(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")


def read_jsonl(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# Session


@dataclass
class Tap:
    """Read-only copy of one channel's traffic for an observing party."""

    channel: str
    observer: PartyId
    payload_types: tuple[type, ...] | None = None
    copies: list[ClassicalMessage] = field(default_factory=list)

    def offer(self, message: ClassicalMessage) -> None:
        if self.payload_types is None or isinstance(message.payload, self.payload_types):
            self.copies.append(message)


class Receipt(NamedTuple):
    seq: int
    channel: str


class _PartyStreams(dict):
    """Per-party "protocol" streams, derived on first use."""

    def __init__(self, session: "Session"):
        super().__init__()
        self._session = session

    def __missing__(self, party: PartyId) -> RngStream:
        party = PartyId(party)
        self._session.require(party)
        stream = self[party] = self._session.stream(party, "protocol")
        return stream


class Session:
    def __init__(self, topology: Iterable[PartyId | str], master_seed: int):
        parties = [PartyId(p) for p in topology]
        if len(set(parties)) != len(parties):
            raise SessionError(f"duplicate roles in topology: {[p.value for p in parties]}")
        if PartyId.AUC not in parties:
            raise SessionError("topology must contain the AUC")
        self.parties: frozenset[PartyId] = frozenset(parties)
        self.master_seed = int(master_seed)
        self.transcript = Transcript(self.master_seed)
        self.quantum_links: tuple[tuple[PartyId, PartyId], ...] = ()
        if PartyId.SEP in self.parties:
            self.quantum_links = tuple(
                (PartyId.SEP, p) for p in TRI_LEGS if p in self.parties
            )
        self.taps: list[Tap] = []
        self._seq = 0
        self._streams: dict[tuple, RngStream] = {}
        self.streams = _PartyStreams(self)

    def stream(self, party: PartyId, purpose: str, counter: int = 0) -> RngStream:
        key = (PartyId(party), purpose, counter)
        s = self._streams.get(key)
        if s is None:
            s = self._streams[key] = RngStream(self.master_seed, key[0], purpose, counter)
        return s

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def require(self, party: PartyId) -> None:
        if party not in self.parties:
            raise SessionError(f"unknown party {PartyId(party).value} in this session")

    def add_tap(
        self, channel: str, observer: PartyId = PartyId.EVE, payload_types: tuple[type, ...] | None = None
    ) -> Tap:
        tap = Tap(channel, PartyId(observer), payload_types)
        self.taps.append(tap)
        return tap

    def log_local(self, party: PartyId, action: str, value: int | None = None) -> LocalEvent:
        event = LocalEvent(self.next_seq(), party, action, value)
        self.transcript.events.append(event)
        return event


def open_session(topology: Iterable[PartyId | str], master_seed: int) -> Session:
    return Session(topology, master_seed)


def classical_send(session: Session, sender: PartyId, receiver: PartyId, payload: Any) -> Receipt:
    """Deliver a classical message, log it, then feed any taps on its channel."""
    if sender not in session.parties or receiver not in session.parties:
        session.require(sender)
        session.require(receiver)
    _check_classical(payload)
    session._seq += 1
    message = ClassicalMessage(session._seq, sender, receiver, payload)
    session.transcript.events.append(message)
    channel = _CHANNEL_PAIRS.get((sender, receiver)) or channel_of(sender, receiver)
    if session.taps:
        for tap in session.taps:
            if tap.channel == channel:
                tap.offer(message)
    return Receipt(message.seq, channel)


# ---------------------------------------------------------------------------
# Quantum delivery


_measure_qubit = qstate.measure_qubit


class QuantumRegister:
    """Mutable holder of one joint state shared by several parties."""

    __slots__ = ("session", "state", "round_index")

    def __init__(self, session: Session, state: StateVector, round_index: int = 0):
        self.session = session
        self.state = state
        self.round_index = round_index

    def measure(self, qubit: int, axis: Axis, rng: qstate.UniformSource, party: Any) -> MeasurementRecord:
        session = self.session
        session._seq += 1
        seq = session._seq
        record, self.state = _measure_qubit(self.state, qubit, axis, rng, seq)
        session.transcript.events.append(MeasurementEvent(seq, party, self.round_index, record))
        return record


class QubitHandle(NamedTuple):
    register: QuantumRegister
    qubit: int
    holder: PartyId

    def measure(self, axis: Axis, rng: qstate.UniformSource | None = None) -> MeasurementRecord:
        if rng is None:
            rng = self.register.session.stream(self.holder, "measure")
        return self.register.measure(self.qubit, axis, rng, self.holder)


@dataclass(frozen=True)
class EveTransform:
    """CNOT one transiting leg onto a fresh ``|0>`` ancilla held by Eve."""

    leg: PartyId
    measure_axis: Axis | None = None


# Eve's CNOT-extended state per (source state object, tapped qubit); each entry
# keeps the source alive so its id stays unique.
_EVE_EXTENDED: dict = {}


def _eve_extend(state: StateVector, qubit: int) -> StateVector:
    key = (id(state), qubit)
    hit = _EVE_EXTENDED.get(key)
    if hit is None:
        extended = qstate.attach_ancilla(state, 0, label=PartyId.EVE)
        hit = (qstate.apply_cnot(extended, qubit, extended.num_qubits - 1), state)
        if len(_EVE_EXTENDED) >= 1024:
            _EVE_EXTENDED.clear()
        _EVE_EXTENDED[key] = hit
    return hit[0]


def quantum_deliver(
    session: Session,
    state: StateVector,
    leg_map: Sequence[PartyId] | Mapping[int, PartyId],
    eve: EveTransform | None = None,
    round_index: int = 0,
) -> dict[PartyId, QubitHandle]:
    """Hand each party a handle to its qubit of ``state``.

    ``leg_map`` assigns qubit ``i`` to a party.  With ``eve`` set, the
    configured leg is CNOT-ed onto an ancilla in transit and Eve receives a
    handle to that ancilla.
    """
    n = len(state.qubit_labels)
    if isinstance(leg_map, Mapping):
        if sorted(leg_map) != list(range(n)):
            raise SessionError(f"leg map covers qubits {sorted(leg_map)} but the state has {n}")
        items = leg_map.items()
    else:
        if len(leg_map) != n:
            raise SessionError(f"leg map lists {len(leg_map)} receivers but the state has {n} qubits")
        items = enumerate(leg_map)
    register = QuantumRegister(session, state, round_index)
    handles = {p: QubitHandle(register, q, p) for q, p in items}
    if len(handles) != n:
        raise SessionError("leg map must send each qubit to a different party")
    if not session.parties.issuperset(handles):
        for p in handles:
            session.require(p)
    if eve is not None:
        session.require(PartyId.EVE)
        if eve.leg not in handles:
            raise SessionError(f"Eve cannot tap {PartyId(eve.leg).value}: no such leg")
        register.state = _eve_extend(state, handles[eve.leg].qubit)
        handles[PartyId.EVE] = QubitHandle(register, state.num_qubits, PartyId.EVE)
        if eve.measure_axis is not None:
            handles[PartyId.EVE].measure(eve.measure_axis)
    return handles
