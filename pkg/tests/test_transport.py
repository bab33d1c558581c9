import math

import numpy as np
import pytest

from relativistic_zk.config import PRESETS, ProtocolConfig
from relativistic_zk.stern.stern_protocol import Phase1Message, Phase2Message, p1_respond, p2_respond, prover_preprocess
from relativistic_zk.field.randomness import seed_from_text
from relativistic_zk.transport.channel import ChannelError, SimulatedChannel, link_name, simulated_channel
from relativistic_zk.transport.drivers import Delivery, Now, Receive, Send, SleepUntil, VirtualTimeDriver
from relativistic_zk.transport.timing import (RoundOutOfRangeError, allowed_losses, check_timing, light_delay_ns,
                                              schedule_round)
from relativistic_zk.transport.wire import (HEADER, MAGIC, Frame, MessageType, WireFormatError,
                                            decode_frame, decode_phase1_challenge, decode_phase1_response,
                                            decode_phase2_challenge, decode_phase2_response, decode_report,
                                            decode_sync, encode_frame, encode_phase1_challenge,
                                            encode_phase1_response, encode_phase2_challenge, encode_phase2_response,
                                            encode_report, encode_report_chunks, encode_sync, parse_header,
                                            peek_round_index)

MS = 1_000_000
SCENARIO1 = PRESETS["scenario1"]


# Wire format

def test_header_layout():
    data = encode_frame(Frame(MessageType.SYNC, 7, b"abc"))
    assert HEADER.size == 14
    assert data[:4] == MAGIC and data[4] == 1 and data[5] == 5
    assert parse_header(data[:HEADER.size]) == (MessageType.SYNC, 7, 3)
    assert peek_round_index(data) == 7


@pytest.mark.parametrize("mutate", [
    lambda d: b"XXXX" + d[4:],
    lambda d: d[:4] + b"\x09" + d[5:],
    lambda d: d[:5] + b"\x63" + d[6:],
])
def test_bad_headers(mutate):
    data = encode_frame(Frame(MessageType.REPORT, 1, b"{}"))
    with pytest.raises(WireFormatError):
        decode_frame(mutate(data))


def test_length_mismatch_and_oversize():
    data = encode_frame(Frame(MessageType.REPORT, 0, b"{}"))
    with pytest.raises(WireFormatError):
        decode_frame(data + b"x")
    oversize = HEADER.pack(MAGIC, 1, 6, 0, (1 << 26) + 1)
    with pytest.raises(WireFormatError):
        parse_header(oversize)
    assert peek_round_index(b"junk") == 0


def test_phase_messages(small_yes, small_params):
    instance, witness = small_yes
    state = prover_preprocess(instance, witness, seed_from_text("wire"), small_params)
    B = Phase1Message(tuple(small_params.element(v) for v in (1, 2, 3)))
    frame = decode_frame(encode_phase1_challenge(4, B))
    assert frame.round_index == 4 and decode_phase1_challenge(frame.payload, small_params) == B

    Y = p1_respond(state, B)
    assert decode_phase1_response(decode_frame(encode_phase1_response(4, Y)).payload, small_params) == Y

    for c in (1, 2, 3):
        assert decode_phase2_challenge(decode_frame(encode_phase2_challenge(4, Phase2Message(c))).payload).c == c
        AZ = p2_respond(state, Phase2Message(c))
        payload = decode_frame(encode_phase2_response(4, AZ)).payload
        assert len(payload) == 4 * small_params.byte_width
        assert decode_phase2_response(payload, small_params, c) == AZ


def test_field_payload_checks(small_params):
    with pytest.raises(WireFormatError):
        decode_phase1_challenge(b"\x00" * (3 * small_params.byte_width - 1), small_params)
    non_canonical = small_params.modulus.to_bytes(small_params.byte_width, "big") * 3
    with pytest.raises(WireFormatError):
        decode_phase1_challenge(non_canonical, small_params)
    with pytest.raises(WireFormatError):
        decode_phase2_challenge(b"\x04")


def test_sync_and_report():
    assert decode_sync(decode_frame(encode_sync(123456789012, 340)).payload) == (123456789012, 340)
    body = {"role": "v1", "rounds": [{"i": 1}]}
    assert decode_report(decode_frame(encode_report(body)).payload) == body
    with pytest.raises(WireFormatError):
        decode_report(b"[1, 2]")
    with pytest.raises(WireFormatError):
        decode_report(b"\xff")


def test_report_is_split_into_numbered_chunks():
    rounds = [{"i": i, "Y": ["ab" * 100] * 3} for i in range(1, 41)]
    frames = [decode_frame(f) for f in encode_report_chunks("v2", rounds, chunk_bytes=2_000)]
    assert len(frames) > 1
    bodies = [decode_report(f.payload) for f in frames]
    assert all(f.msg_type is MessageType.REPORT and f.round_index == 0 for f in frames)
    assert [b["chunk"] for b in bodies] == list(range(len(frames)))
    assert {b["chunks"] for b in bodies} == {len(frames)}
    assert [r for b in bodies for r in b["rounds"]] == rounds
    assert all(len(f.payload) < 2_000 + 800 for f in frames)


# Timing

def test_light_delay():
    assert light_delay_ns(400) == pytest.approx(1_334_256.4, abs=0.1)
    assert math.isinf(light_delay_ns(math.inf))


def test_scenario_budgets():
    assert SCENARIO1.phase1_budget_ns / MS == pytest.approx(1.834, abs=1e-3)
    assert SCENARIO1.phase2_budget_ns / MS == pytest.approx(0.834, abs=1e-3)
    assert SCENARIO1.histogram_bucket_us == 10
    assert PRESETS["scenario2"].histogram_bucket_us == 100


def test_schedule():
    config = ProtocolConfig(n=16, k=8, w=3, q_exponent=None, R=5, T1_ns=10 * MS)
    assert schedule_round(1, config) == (10 * MS, 10 * MS + MS // 2)
    assert schedule_round(3, config) == (14 * MS, 14 * MS + MS // 2)
    with pytest.raises(RoundOutOfRangeError):
        schedule_round(6, config)
    with pytest.raises(RoundOutOfRangeError):
        schedule_round(0, config)


def test_phase1_latency_enforcement():
    tau1, tau2 = 0, MS // 2
    # 1.9 ms phase-1 latency exceeds T_shift + D/c
    assert not check_timing(tau1 + 19 * MS // 10, tau2, tau2 + 100_000, tau1, 400)
    assert check_timing(tau1 + 12 * MS // 10, tau2, tau2 + 100_000, tau1, 400)


def test_phase2_latency_enforcement():
    tau1, tau2 = 0, MS // 2
    assert check_timing(tau1, tau2, tau2 + 800_000, tau1, 400)
    assert not check_timing(tau1, tau2, tau2 + 900_000, tau1, 400)


def test_timing_bounds_are_strict():
    reach = math.ceil(light_delay_ns(400))
    assert not check_timing(reach + MS // 2, MS // 2, 0, 0, 400)
    assert check_timing(reach + MS // 2 - 1, MS // 2, 0, 0, 400)


def test_missing_answer_is_a_timing_failure():
    assert not check_timing(None, 0, 0, 0, 400)
    assert not check_timing(0, 0, None, 0, 400)


def test_allowed_losses():
    assert allowed_losses(340, 22 / 340) == 22
    assert allowed_losses(340, 0.0647) == 22
    assert allowed_losses(100, 0.0) == 0
    assert allowed_losses(10, 0.11) == 2


# Simulated channel

def test_link_names():
    assert link_name("p1", "v1") == "v1-p1"
    assert link_name("p2", "p1") == "p1-p2"
    with pytest.raises(ChannelError):
        link_name("v1", "p2")


def test_channel_delay_and_order():
    channel = SimulatedChannel(one_way_delay_ns=1000, jitter_ns=500, rng=np.random.default_rng(0))
    frame = encode_phase2_challenge(1, Phase2Message(1))
    arrivals = [channel.schedule("v2", "p2", t, frame) for t in range(0, 100, 10)]
    assert all(1000 <= a - t <= 1500 for a, t in zip(arrivals, range(0, 100, 10)))
    assert arrivals == sorted(arrivals)


def test_channel_link_delays_and_overrides():
    channel = SimulatedChannel(link_delays={"p1-p2": 5000}, delay_overrides={3: 700})
    assert channel.delay_for("p1-p2", 3) == 5000
    assert channel.delay_for("v1-p1", 3) == 700
    assert channel.delay_for("v1-p1", 4) == 0


def test_channel_drops_only_round_frames_on_lossy_links():
    channel = SimulatedChannel(drop_prob=0.5, rng=np.random.default_rng(1))
    sync = encode_sync(0, 10)
    assert all(channel.schedule("v1", "p1", 0, sync) is not None for _ in range(50))
    assert all(channel.schedule("v1", "v2", 0, encode_phase2_challenge(i, Phase2Message(2))) is not None
               for i in range(1, 51))
    outcomes = [channel.schedule("v2", "p2", 0, encode_phase2_challenge(i, Phase2Message(2))) for i in range(1, 401)]
    dropped = sum(o is None for o in outcomes)
    assert 140 < dropped < 260
    assert channel.get_status()["v2-p2"]["dropped"] == dropped
    assert 0 < channel.loss_rate() < 1


def test_a_lost_round_loses_every_lossy_frame():
    channel = SimulatedChannel(drop_prob=0.5, rng=np.random.default_rng(4))
    for i in range(1, 101):
        frame = encode_phase2_challenge(i, Phase2Message(1))
        outcomes = {channel.schedule(src, dst, 0, frame) is None
                    for src, dst in (("v1", "p1"), ("p1", "v1"), ("v2", "p2"), ("p2", "v2"))}
        assert outcomes == {channel.round_lost(i)}
    assert channel.frame_loss_rate() == pytest.approx(channel.loss_rate())


def test_zero_delay_channel_delivers_in_order():
    channel = simulated_channel(0)
    frame = encode_phase2_challenge(1, Phase2Message(1))
    assert [channel.schedule("v1", "p1", t, frame) for t in range(5)] == [0, 1, 2, 3, 4]
    assert channel.loss_rate() == 0.0


def test_loss_rate_is_per_round():
    channel = simulated_channel(0, drop_prob=0.001, rng=np.random.default_rng(7))
    for i in range(1, 10_001):
        frame = encode_phase2_challenge(i, Phase2Message(0))
        channel.schedule("v1", "p1", i, frame)
        channel.schedule("v2", "p2", i, frame)
    sigma = math.sqrt(0.001 * 0.999 / 10_000)
    assert abs(channel.loss_rate() - 0.001) <= 3 * sigma


def test_channel_rejects_bad_settings():
    with pytest.raises(ValueError):
        SimulatedChannel(drop_prob=1.0)
    with pytest.raises(ValueError):
        SimulatedChannel(one_way_delay_ns=-1)


# Virtual time driver

class EchoRole:
    """Answers each frame from its peer with the same bytes"""

    def __init__(self, name, peer, count):
        self.name, self.peer, self.count = name, peer, count

    def program(self):
        for _ in range(self.count):
            delivery = yield Receive(self.peer)
            yield Send(self.peer, encode_frame(delivery.frame))
        return "done"


class PingRole:
    def __init__(self, name, peer, deadline_ns=None):
        self.name, self.peer, self.deadline_ns = name, peer, deadline_ns

    def program(self):
        yield SleepUntil(1000)
        sent = yield Send(self.peer, encode_sync(5, 1))
        delivery = yield Receive(self.peer, self.deadline_ns)
        now = yield Now()
        return sent, delivery, now


def test_virtual_driver_round_trip():
    driver = VirtualTimeDriver(SimulatedChannel(one_way_delay_ns=250))
    results = driver.run([PingRole("v1", "p1"), EchoRole("p1", "v1", 1)])
    sent, delivery, now = results["v1"]
    assert sent == 1000
    assert isinstance(delivery, Delivery) and delivery.received_ns == 1500 == now
    assert decode_sync(delivery.frame.payload) == (5, 1)
    assert results["p1"] == "done"


def test_virtual_driver_deadline():
    driver = VirtualTimeDriver(SimulatedChannel(one_way_delay_ns=250))
    # the echo never runs, so the receive times out
    results = driver.run([PingRole("v1", "p1", deadline_ns=1200), EchoRole("p1", "v1", 0)])
    sent, delivery, now = results["v1"]
    assert delivery is None and now == 1200


def test_virtual_driver_malformed_frame():
    class Garbage:
        name = "p1"

        def program(self):
            delivery = yield Receive("v1")
            yield Send("v1", b"RZKP\x01\x09" + b"\x00" * 8)
            return delivery

    results = VirtualTimeDriver(SimulatedChannel()).run([PingRole("v1", "p1"), Garbage()])
    _, delivery, _ = results["v1"]
    assert delivery.frame is None and delivery.error
