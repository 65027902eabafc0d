import json

import numpy as np
import pytest

from qgsm.qstate import Axis, NamedState, StateVector, make_named_state, outcome_distribution
from qgsm.runtime import (
    BasisAnnounce,
    BasisReport,
    ClassicalMessage,
    Decision,
    EveTransform,
    NullMessage,
    PartyId,
    RngStream,
    SessionError,
    Verdict,
    WindowRequest,
    channel_of,
    classical_send,
    derive_trial_seed,
    open_session,
    quantum_deliver,
    read_jsonl,
)

SEP, SIM1, SIM2, AUC, EVE = PartyId.SEP, PartyId.SIM1, PartyId.SIM2, PartyId.AUC, PartyId.EVE
FULL = [SEP, SIM1, SIM2, AUC]


def test_open_session_links_and_empty_transcript():
    s = open_session(FULL, 7)
    assert len(s.quantum_links) == 3
    assert s.transcript.events == []
    classical = open_session([SIM1, AUC], 1)
    assert classical.quantum_links == ()


def test_open_session_errors():
    with pytest.raises(SessionError):
        open_session([SIM1, SIM1, AUC], 0)
    with pytest.raises(SessionError):
        open_session([SEP, SIM1], 0)


def test_streams_deterministic_and_distinct():
    a, b = open_session(FULL, 7), open_session(FULL, 7)
    for p in FULL:
        assert [a.streams[p].random() for _ in range(5)] == [b.streams[p].random() for _ in range(5)]
    x = RngStream(7, SIM1, "basis").generator.random(1000)
    y = RngStream(7, SIM2, "basis").generator.random(1000)
    z = RngStream(7, SIM1, "basis", counter=1).generator.random(1000)
    assert not np.array_equal(x, y) and not np.array_equal(x, z)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.15


def test_stream_block_size_does_not_change_sequence():
    s = RngStream(3, AUC, "p")
    scalar = [s.random() for _ in range(5000)]
    assert np.array_equal(scalar, RngStream(3, AUC, "p").generator.random(5000))


def test_trial_seeds_distinct():
    seeds = {derive_trial_seed(0, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert derive_trial_seed(5, 3) == derive_trial_seed(5, 3)


def test_classical_send_sequence_and_tap():
    s = open_session(FULL + [EVE], 0)
    tap = s.add_tap("A")
    r1 = classical_send(s, SIM1, AUC, BasisAnnounce(0, Axis.X))
    r2 = classical_send(s, AUC, SIM2, BasisAnnounce(0, Axis.Z))
    assert (r1.channel, r2.channel) == ("A", "B")
    assert r2.seq > r1.seq
    assert [m.payload for m in tap.copies] == [BasisAnnounce(0, Axis.X)]
    assert tap.copies[0] == s.transcript.events[0]


def test_null_message_to_both_sims():
    s = open_session(FULL, 0)
    for sim in (SIM1, SIM2):
        classical_send(s, AUC, sim, NullMessage(4, 1))
    msgs = s.transcript.messages(NullMessage)
    assert len(msgs) == 2 and {m.payload.round_index for m in msgs} == {4}


def test_classical_send_unknown_party():
    s = open_session([SIM1, AUC], 0)
    with pytest.raises(SessionError):
        classical_send(s, SIM2, AUC, BasisAnnounce(0, Axis.X))


def test_classicality_firewall():
    s = open_session([SIM1, AUC], 0)
    with pytest.raises(TypeError):
        classical_send(s, SIM1, AUC, make_named_state(NamedState.GHZ3, (0, 1, 2)))
    with pytest.raises(TypeError):
        classical_send(s, SIM1, AUC, BasisReport((1,), (Axis.Z,), (np.array([1.0j]),)))
    assert s.transcript.events == []


def test_transcript_json_fields(tmp_path):
    s = open_session(FULL, 2)
    classical_send(s, SIM1, AUC, WindowRequest(3, 4))
    handles = quantum_deliver(s, make_named_state(NamedState.GHZ3, (SIM1, SIM2, AUC)), (SIM1, SIM2, AUC))
    handles[AUC].measure(Axis.Z)
    classical_send(s, AUC, SIM1, Decision(Verdict.ACCEPT))
    path = tmp_path / "t.jsonl"
    s.transcript.write_jsonl(path)
    rows = read_jsonl(path)
    assert [r["kind"] for r in rows] == ["message", "measurement", "message"]
    for r in rows:
        assert set(r) == {"seq", "kind", "sender", "receiver", "payload"}
    assert rows[0]["payload"] == {"type": "WindowRequest", "n": 3, "m": 4}
    assert [r["seq"] for r in rows] == sorted(r["seq"] for r in rows)
    json.dumps(rows)


def _scripted_run(seed: int) -> str:
    s = open_session(FULL, seed)
    ghz = make_named_state(NamedState.GHZ3, (SIM1, SIM2, AUC))
    for r in range(30):
        h = quantum_deliver(s, ghz, (SIM1, SIM2, AUC), round_index=r)
        for p in (AUC, SIM1, SIM2):
            axis = s.streams[p].axis()
            h[p].measure(axis)
            classical_send(s, p, AUC if p is not AUC else SIM1, BasisAnnounce(r, axis))
    return s.transcript.to_jsonl()


def test_replay_is_byte_identical():
    assert _scripted_run(11) == _scripted_run(11)
    assert _scripted_run(11) != _scripted_run(12)


def test_quantum_deliver_plain():
    s = open_session(FULL, 0)
    ghz = make_named_state(NamedState.GHZ3, (SIM1, SIM2, AUC))
    h = quantum_deliver(s, ghz, (SIM1, SIM2, AUC))
    assert set(h) == {SIM1, SIM2, AUC}
    assert h[SIM1].register.state is ghz
    bell = make_named_state(NamedState.BELL_PHI_PLUS, (SIM1, AUC))
    assert set(quantum_deliver(s, bell, {0: SIM1, 1: AUC})) == {SIM1, AUC}


def test_quantum_deliver_errors():
    s = open_session(FULL, 0)
    ghz = make_named_state(NamedState.GHZ3, (SIM1, SIM2, AUC))
    with pytest.raises(SessionError):
        quantum_deliver(s, ghz, (SIM1, AUC))
    with pytest.raises(SessionError):
        quantum_deliver(s, ghz, (SIM1, SIM1, AUC))
    with pytest.raises(SessionError):
        quantum_deliver(s, ghz, (SIM1, SIM2, AUC), eve=EveTransform(SIM1))


def test_quantum_deliver_with_eve_extends_state():
    s = open_session(FULL + [EVE], 0)
    ghz = make_named_state(NamedState.GHZ3, (SIM1, SIM2, AUC))
    h = quantum_deliver(s, ghz, (SIM1, SIM2, AUC), eve=EveTransform(SIM1))
    state: StateVector = h[EVE].register.state
    assert state.num_qubits == 4 and h[EVE].qubit == 3
    zz = outcome_distribution(state, [(0, Axis.Z), (3, Axis.Z)])
    assert zz[(0, 0)] == pytest.approx(0.5) and zz[(1, 1)] == pytest.approx(0.5)


def test_eve_measure_axis_logged():
    s = open_session(FULL + [EVE], 0)
    ghz = make_named_state(NamedState.GHZ3, (SIM1, SIM2, AUC))
    quantum_deliver(s, ghz, (SIM1, SIM2, AUC), eve=EveTransform(SIM2, Axis.Z))
    events = s.transcript.measurements()
    assert len(events) == 1 and events[0].party is EVE


def test_channel_names():
    assert channel_of(SIM1, AUC) == channel_of(AUC, SIM1) == "A"
    assert channel_of(SIM2, AUC) == "B"
    assert channel_of(SIM1, SIM2) == "relay"
    assert isinstance(ClassicalMessage(1, SIM1, AUC, None), tuple)
