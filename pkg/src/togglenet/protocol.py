"""Re-keyed channel over a reliable ordered byte stream.

Two frame types share a one-byte header (bit 7: frame type, bits 6..0:
a per-direction rolling counter):

* S-frames (type 1) carry a freshly drawn network configuration sealed
  with the AEAD: 16-byte nonce, ciphertext of the selector bytes, and
  a 16-byte tag.  The header byte is bound as associated data.
* I-frames (type 0) carry one data block: the block routed through the
  network and pushed through the substitution layer.

After every I-frame both endpoints fold the on-the-wire ciphertext
cyclically into the whole selector vector, so consecutive blocks never
see the same effective configuration, and a transmitter re-keys after
at most T blocks.  T must stay below the block width n: past n blocks
under one configuration an eavesdropper could assemble a solvable
linear system for the network's affine map.

The nonce is a 128-bit per-direction counter; the initiator's transmit
direction uses even values and the responder's odd, so one pre-shared
key never sees a nonce twice.  Frames arrive in order (the transport is
reliable); a counter gap means replay or loss and is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from . import acorn
from ._bits import bits_to_bytes, bytes_to_bits
from .cstn import (
    NetworkKind, Topology, Trn, TrnParts, build_topology,
    forward_parts, inverse_parts,
)
from .rng import LABEL_TRN, TriviumPrng
from .sbox import KHAZAD_SBOX

HEADER_REKEY = 0x80
COUNTER_MOD = 128
DEFAULT_T = 32


class ProtocolError(Exception):
    """Frame violates the session contract (ordering, phase, length)."""


class SessionAborted(Exception):
    """Session is dead after an authentication failure."""


class Role(str, Enum):
    INITIATOR = "initiator"
    RESPONDER = "responder"


@dataclass
class SessionConfig:
    key: bytes
    n: int = 64
    kind: NetworkKind = NetworkKind.LOG_EXTRA
    m: int = 4
    t_blocks: int = DEFAULT_T

    def __post_init__(self):
        if len(self.key) != acorn.KEY_BYTES:
            raise ValueError(f"key must be {acorn.KEY_BYTES} bytes")
        if self.n % 8 != 0:
            raise ValueError("block width must be a whole number of bytes")
        if not 1 <= self.t_blocks < self.n:
            raise ValueError(
                f"blocks-per-configuration must be in [1, {self.n - 1}] "
                "(the affine system becomes solvable at n blocks)"
            )
        self.topology: Topology = build_topology(self.n, self.kind, self.m)

    @property
    def s_payload_len(self) -> int:
        return acorn.NPUB_BYTES + self.topology.trn_bytes + acorn.TAG_BYTES

    @property
    def i_payload_len(self) -> int:
        return self.n // 8


@dataclass
class Frame:
    is_rekey: bool
    counter: int
    payload: bytes

    @property
    def header(self) -> int:
        return (HEADER_REKEY if self.is_rekey else 0) | self.counter

    def encode(self) -> bytes:
        return bytes([self.header]) + self.payload


class FrameParser:
    """Incremental splitter for the byte stream of one direction."""

    def __init__(self, config: SessionConfig):
        self._cfg = config
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Frame]:
        self._buf.extend(data)
        frames = []
        while self._buf:
            header = self._buf[0]
            is_rekey = bool(header & HEADER_REKEY)
            need = 1 + (self._cfg.s_payload_len if is_rekey else self._cfg.i_payload_len)
            if len(self._buf) < need:
                break
            frames.append(Frame(is_rekey, header & 0x7F, bytes(self._buf[1:need])))
            del self._buf[:need]
        return frames

    @property
    def pending(self) -> int:
        return len(self._buf)


class Transmitter:
    """Outbound state machine for one direction."""

    def __init__(self, config: SessionConfig, prng: TriviumPrng, role: Role):
        self.cfg = config
        self.topo = config.topology
        self.prng = prng
        self.parts: TrnParts | None = None
        self.blocks_since_rekey = 0
        self.npub_counter = 0 if role is Role.INITIATOR else 1
        self.frame_counter = 0
        self.rekey_count = 0
        self.block_count = 0

    def _next_counter(self) -> int:
        c = self.frame_counter
        self.frame_counter = (c + 1) % COUNTER_MOD
        return c

    def rekey_frame(self) -> Frame:
        """Draw a fresh configuration, seal it, and install it."""
        trn_bytes = self.prng.draw(LABEL_TRN, self.topo.trn_bytes)
        trn = Trn.from_bytes(trn_bytes, self.topo)
        counter = self._next_counter()
        header = HEADER_REKEY | counter
        npub = self.npub_counter.to_bytes(acorn.NPUB_BYTES, "big")
        self.npub_counter += 2
        ct, tag = acorn.seal(self.cfg.key, npub, bytes([header]), trn_bytes)
        self.parts = trn.parts(self.topo).copy()
        self.blocks_since_rekey = 0
        self.rekey_count += 1
        return Frame(True, counter, npub + ct + tag)

    def data_frames(self, block: bytes) -> list[Frame]:
        """Encrypt one block, re-keying first when the budget is spent."""
        if len(block) != self.cfg.i_payload_len:
            raise ProtocolError(f"block must be {self.cfg.i_payload_len} bytes")
        frames = []
        if self.parts is None or self.blocks_since_rekey >= self.cfg.t_blocks:
            frames.append(self.rekey_frame())
        assert self.blocks_since_rekey < self.cfg.t_blocks
        x = bytes_to_bits(block, self.topo.n)
        y = forward_parts(self.topo, self.parts, x)
        ct = bits_to_bytes(y, self.topo.n).translate(KHAZAD_SBOX)
        self.parts.xor_cyclic(self.topo, bytes_to_bits(ct, self.topo.n))
        self.blocks_since_rekey += 1
        self.block_count += 1
        frames.append(Frame(False, self._next_counter(), ct))
        return frames

    def send(self, data: bytes) -> bytes:
        """Frame a whole buffer (length must be a block multiple)."""
        bs = self.cfg.i_payload_len
        if len(data) % bs:
            raise ProtocolError(f"data length must be a multiple of {bs} bytes")
        out = bytearray()
        for off in range(0, len(data), bs):
            for fr in self.data_frames(data[off:off + bs]):
                out.extend(fr.encode())
        return bytes(out)


class Receiver:
    """Inbound state machine for one direction."""

    def __init__(self, config: SessionConfig, peer_role: Role):
        self.cfg = config
        self.topo = config.topology
        self.parts: TrnParts | None = None
        self.blocks_since_rekey = 0
        self.expected_counter = 0
        self.last_npub = None
        self.npub_parity = 0 if peer_role is Role.INITIATOR else 1
        self.aborted = False
        self.rekey_count = 0
        self.block_count = 0

    def feed(self, frame: Frame) -> bytes | None:
        """Process one frame: plaintext block for I-frames, None for S.

        AuthenticationError aborts the session permanently; a
        ProtocolError rejects the frame and leaves recovery to the caller.
        """
        if self.aborted:
            raise SessionAborted("session aborted by earlier authentication failure")
        if frame.counter != self.expected_counter:
            raise ProtocolError(
                f"frame counter {frame.counter}, expected {self.expected_counter} "
                "(replay or loss)"
            )
        if frame.is_rekey:
            plaintext = self._handle_rekey(frame)
        else:
            plaintext = self._handle_block(frame)
        self.expected_counter = (self.expected_counter + 1) % COUNTER_MOD
        return plaintext

    def _handle_rekey(self, frame: Frame) -> None:
        if len(frame.payload) != self.cfg.s_payload_len:
            raise ProtocolError("bad re-key payload length")
        npub = frame.payload[:acorn.NPUB_BYTES]
        ct = frame.payload[acorn.NPUB_BYTES:-acorn.TAG_BYTES]
        tag = frame.payload[-acorn.TAG_BYTES:]
        nval = int.from_bytes(npub, "big")
        if nval % 2 != self.npub_parity or (
            self.last_npub is not None and nval <= self.last_npub
        ):
            raise ProtocolError("nonce out of sequence")
        try:
            trn_bytes = acorn.open_(
                self.cfg.key, npub, bytes([frame.header]), ct, tag
            )
        except acorn.AuthenticationError:
            self.aborted = True
            raise
        self.last_npub = nval
        self.parts = Trn.from_bytes(trn_bytes, self.topo).parts(self.topo).copy()
        self.blocks_since_rekey = 0
        self.rekey_count += 1
        return None

    def _handle_block(self, frame: Frame) -> bytes:
        if self.parts is None:
            raise ProtocolError("data frame before the first re-key")
        if len(frame.payload) != self.cfg.i_payload_len:
            raise ProtocolError("bad data payload length")
        if self.blocks_since_rekey >= self.cfg.t_blocks:
            raise ProtocolError("re-key overdue: configuration budget exhausted")
        y = bytes_to_bits(frame.payload.translate(KHAZAD_SBOX), self.topo.n)
        x = inverse_parts(self.topo, self.parts, y)
        self.parts.xor_cyclic(self.topo, bytes_to_bits(frame.payload, self.topo.n))
        self.blocks_since_rekey += 1
        self.block_count += 1
        return bits_to_bytes(x, self.topo.n)


class Session:
    """Both directions of one endpoint over a full-duplex connection."""

    def __init__(self, config: SessionConfig, role: Role, prng: TriviumPrng):
        self.cfg = config
        self.role = role
        self.tx = Transmitter(config, prng, role)
        peer = Role.RESPONDER if role is Role.INITIATOR else Role.INITIATOR
        self.rx = Receiver(config, peer)
        self.parser = FrameParser(config)

    def send(self, data: bytes) -> bytes:
        return self.tx.send(data)

    def receive(self, wire: bytes) -> bytes:
        """Feed raw stream bytes; returns the decoded plaintext so far."""
        out = bytearray()
        for frame in self.parser.feed(wire):
            block = self.rx.feed(frame)
            if block is not None:
                out.extend(block)
        return bytes(out)
