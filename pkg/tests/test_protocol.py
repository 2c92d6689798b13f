import random
import socket
import threading

import pytest

from togglenet import acorn
from togglenet.cstn import NetworkKind, Trn, extract_affine
from togglenet.protocol import (
    Frame, FrameParser, ProtocolError, Role, Session, SessionAborted,
    SessionConfig, Transmitter,
)
from togglenet.rng import TriviumPrng

KEY = bytes(range(16))


def make_pair(t_blocks=32, seed_a=b"A", seed_b=b"B", **kw):
    cfg = SessionConfig(key=KEY, t_blocks=t_blocks, **kw)
    a = Session(cfg, Role.INITIATOR, TriviumPrng(seed_a * 16))
    b = Session(cfg, Role.RESPONDER, TriviumPrng(seed_b * 16))
    return cfg, a, b


class TestConfig:
    def test_defaults(self):
        cfg = SessionConfig(key=KEY)
        assert cfg.topology.selector_count == 960
        assert cfg.s_payload_len == 152
        assert cfg.i_payload_len == 8

    def test_t_must_stay_below_block_width(self):
        with pytest.raises(ValueError):
            SessionConfig(key=KEY, t_blocks=64)
        with pytest.raises(ValueError):
            SessionConfig(key=KEY, t_blocks=0)
        SessionConfig(key=KEY, t_blocks=63)

    def test_key_length(self):
        with pytest.raises(ValueError):
            SessionConfig(key=bytes(8))


class TestFraming:
    def test_rekey_payload_carries_120_config_bytes(self):
        cfg, a, _ = make_pair()
        fr = a.tx.rekey_frame()
        assert fr.is_rekey
        assert len(fr.payload) == 16 + 120 + 16

    def test_first_frame_of_a_session_is_rekey(self):
        cfg, a, _ = make_pair()
        frames = a.tx.data_frames(b"\x00" * 8)
        assert [f.is_rekey for f in frames] == [True, False]

    def test_successive_rekeys_use_distinct_increasing_npubs(self):
        cfg, a, _ = make_pair()
        f1 = a.tx.rekey_frame()
        f2 = a.tx.rekey_frame()
        n1 = int.from_bytes(f1.payload[:16], "big")
        n2 = int.from_bytes(f2.payload[:16], "big")
        assert n2 == n1 + 2

    def test_parser_reassembles_byte_dribble(self):
        cfg, a, b = make_pair()
        wire = a.send(bytes(range(80)))
        out = bytearray()
        for i in range(len(wire)):
            out += b.receive(wire[i:i + 1])
        assert bytes(out) == bytes(range(80))

    def test_frame_encode_header_bits(self):
        fr = Frame(True, 5, b"x")
        assert fr.encode()[0] == 0x85


class TestLoopback:
    @pytest.mark.parametrize("t_blocks", [1, 2, 3, 5, 32])
    def test_end_to_end_identity_any_t(self, t_blocks):
        rnd = random.Random(t_blocks)
        cfg, a, b = make_pair(t_blocks=t_blocks)
        data = bytes(rnd.randrange(256) for _ in range(8 * 200))
        assert b.receive(a.send(data)) == data

    def test_rekey_count_is_ceil_blocks_over_t(self):
        cfg, a, b = make_pair(t_blocks=32)
        b.receive(a.send(bytes(8 * 100)))
        assert b.rx.rekey_count == 4  # ceil(100/32)
        assert b.rx.block_count == 100

    def test_feedback_synchrony_after_every_frame(self):
        rnd = random.Random(7)
        cfg, a, b = make_pair(t_blocks=5)
        for _ in range(30):
            block = bytes(rnd.randrange(256) for _ in range(8))
            b.receive(a.send(block))
            assert (a.tx.parts.swap, a.tx.parts.t0, a.tx.parts.t1) == (
                b.rx.parts.swap, b.rx.parts.t0, b.rx.parts.t1)

    def test_identical_plaintexts_encrypt_differently(self):
        cfg, a, _ = make_pair()
        f1 = a.tx.data_frames(b"\xaa" * 8)[-1]
        f2 = a.tx.data_frames(b"\xaa" * 8)[-1]
        assert f1.payload != f2.payload

    def test_never_more_than_t_data_frames_between_rekeys(self):
        cfg, a, b = make_pair(t_blocks=7)
        wire = a.send(bytes(8 * 100))
        run = 0
        parser = FrameParser(cfg)
        for fr in parser.feed(wire):
            if fr.is_rekey:
                run = 0
            else:
                run += 1
                assert run <= 7

    def test_effective_affine_map_changes_when_ciphertext_nonzero(self):
        cfg, a, b = make_pair()
        b.receive(a.send(bytes(8)))  # install first configuration
        topo = cfg.topology
        before = extract_affine(topo, a.tx.parts.to_trn(topo))
        frame = a.tx.data_frames(b"\x42" * 8)[-1]
        assert frame.payload != bytes(8)
        after = extract_affine(topo, a.tx.parts.to_trn(topo))
        assert (before.columns, before.offset) != (after.columns, after.offset)

    def test_duplex_directions_independent(self):
        rnd = random.Random(9)
        cfg, a, b = make_pair()
        up = bytes(rnd.randrange(256) for _ in range(8 * 50))
        down = bytes(rnd.randrange(256) for _ in range(8 * 50))
        assert b.receive(a.send(up)) == up
        assert a.receive(b.send(down)) == down
        assert a.tx.npub_counter % 2 == 0
        assert b.tx.npub_counter % 2 == 1


class TestErrors:
    def test_tampered_rekey_tag_aborts_session(self):
        cfg, a, b = make_pair()
        wire = bytearray(a.send(b"12345678"))
        wire[152] ^= 1  # inside the S-frame tag
        with pytest.raises(acorn.AuthenticationError):
            b.receive(bytes(wire))
        with pytest.raises(SessionAborted):
            b.receive(bytes(9))

    def test_replayed_data_frame_is_counter_discontinuity(self):
        cfg, a, b = make_pair()
        wire = a.send(b"ABCDEFGH")
        b.receive(wire)
        with pytest.raises(ProtocolError, match="counter"):
            b.receive(wire[-9:])

    def test_data_frame_before_first_rekey(self):
        cfg, _, b = make_pair()
        with pytest.raises(ProtocolError, match="before the first"):
            b.receive(bytes([0x00]) + bytes(8))

    def test_wrong_key_aborts(self):
        cfg, a, _ = make_pair()
        other = SessionConfig(key=bytes(16))
        b = Session(other, Role.RESPONDER, TriviumPrng(b"Z" * 16))
        with pytest.raises(acorn.AuthenticationError):
            b.receive(a.send(b"12345678"))

    def test_block_size_enforced(self):
        cfg, a, _ = make_pair()
        with pytest.raises(ProtocolError):
            a.send(b"123")

    def test_budget_overrun_rejected_by_receiver(self):
        cfg, a, b = make_pair(t_blocks=2)
        wire = a.send(bytes(8 * 2))
        frames = FrameParser(cfg).feed(wire)
        b.receive(wire)
        # hand-craft a third data frame under the same configuration
        tx = a.tx
        extra = Frame(False, b.rx.expected_counter, frames[-1].payload)
        with pytest.raises(ProtocolError, match="overdue"):
            b.receive(extra.encode())


class TestOverSockets:
    def test_full_duplex_over_socketpair(self):
        rnd = random.Random(11)
        cfg, a, b = make_pair()
        sa, sb = socket.socketpair()
        payload_up = bytes(rnd.randrange(256) for _ in range(8 * 512))
        payload_down = bytes(rnd.randrange(256) for _ in range(8 * 512))
        got = {}

        def run(sock, session, outgoing, tag):
            sock.sendall(session.send(outgoing))
            sock.shutdown(socket.SHUT_WR)
            buf = bytearray()
            while True:
                chunk = sock.recv(65536)
                if not chunk:
                    break
                buf += session.receive(chunk)
            got[tag] = bytes(buf)
            sock.close()

        t1 = threading.Thread(target=run, args=(sa, a, payload_up, "recv_by_a"))
        t2 = threading.Thread(target=run, args=(sb, b, payload_down, "recv_by_b"))
        t1.start(); t2.start(); t1.join(); t2.join()
        assert got["recv_by_a"] == payload_down
        assert got["recv_by_b"] == payload_up
