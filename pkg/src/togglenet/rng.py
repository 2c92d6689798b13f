"""Seeded deterministic generator with health-checked reseeding.

A 128-bit seed drawn from an entropy source (through the continuous
health tests) keys a Trivium instance: the first 80 seed bits become
the key, the next 48 the leading IV bits, with the IV tail zero.
Reseeding happens once per activation; sessions never reseed mid-run.

Draws for different purposes (network configurations, nonces, masking
randomness) come from disjoint substreams so that transcripts replay
deterministically in tests: each substream's IV carries its one-byte
domain label directly after the 48 seed bits.  Label 0 is the plain
stream whose IV tail is all zero.
"""

from __future__ import annotations

import os

from .health import HealthMonitor
from .trivium import Trivium

SEED_BYTES = 16

LABEL_RAW = 0x00
LABEL_TRN = 0x54
LABEL_NPUB = 0x4E
LABEL_MASK = 0x4D


class EntropyFailure(RuntimeError):
    """Health tests rejected the entropy source during a seed draw."""


class OsEntropySource:
    """Operating-system entropy, assessed at full entropy."""

    entropy_per_bit = 1.0

    def read(self, nbytes: int) -> bytes:
        return os.urandom(nbytes)


class FixedSource:
    """Deterministic test source that replays the given bytes."""

    def __init__(self, data: bytes, entropy_per_bit: float = 1.0):
        self._data = data
        self._pos = 0
        self.entropy_per_bit = entropy_per_bit

    def read(self, nbytes: int) -> bytes:
        if self._pos + nbytes > len(self._data):
            raise EntropyFailure("fixed source exhausted")
        out = self._data[self._pos:self._pos + nbytes]
        self._pos += nbytes
        return out


class StuckSource:
    """Fault-injection source: every bit stuck at the given value."""

    entropy_per_bit = 1.0

    def __init__(self, value: int = 0):
        self._byte = 0xFF if value else 0x00

    def read(self, nbytes: int) -> bytes:
        return bytes([self._byte]) * nbytes


class TriviumPrng:
    """Domain-separated keystreams from one 128-bit seed."""

    def __init__(self, seed: bytes):
        if len(seed) != SEED_BYTES:
            raise ValueError(f"seed must be {SEED_BYTES} bytes")
        self._key = seed[:10]
        self._iv48 = seed[10:16]
        self._streams: dict[int, Trivium] = {}

    def stream(self, label: int = LABEL_RAW) -> Trivium:
        if label not in self._streams:
            iv = self._iv48 + bytes([label]) + b"\x00" * 3
            self._streams[label] = Trivium.warmed_up(self._key, iv)
        return self._streams[label]

    def draw(self, label: int, nbytes: int) -> bytes:
        return self.stream(label).keystream(nbytes)


def reseed(source, monitor: HealthMonitor | None = None) -> TriviumPrng:
    """Draw a health-checked 128-bit seed and build the generator.

    Every seed bit passes the repetition-count and adaptive-proportion
    tests; an alarm aborts the reseed and the caller's activation.
    """
    if monitor is None:
        monitor = HealthMonitor(h=getattr(source, "entropy_per_bit", 1.0))
    seed = source.read(SEED_BYTES)
    if not monitor.feed_bytes(seed):
        raise EntropyFailure(f"seed draw failed health test: {monitor.alarm}")
    return TriviumPrng(seed)
