"""Configurable switching-and-toggling networks.

A network is a column of 2x2 switches repeated over a number of stages,
with a perfect-shuffle link permutation between consecutive stages.
Each switch has three selector bits: one swap selector that routes its
two inputs straight or crossed, and two toggle selectors that XOR onto
the two outputs.  The full selector vector configures the network and
acts as a frequently refreshed symmetric key.

Two kinds are supported: the blocking OMEGA arrangement with log2(n)
stages, and a near non-blocking variant with extra stages prepended
(log2(n) - 2 extra stages by default).

Conventions, fixed so wire frames are portable:

* block bit i (LSB of the int) rides on link i;
* selector bits are stage-major, switch index ascending, three bits per
  switch in the order [swap, toggle0, toggle1];
* toggles apply to switch *outputs*, after routing;
* hex/byte encodings put selector 0 (and link 0) in the most
  significant bit of the first byte.

For a fixed configuration the network computes an affine map
y = A.x xor b over GF(2); `extract_affine` recovers (A, b).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable

from ._bits import bits_to_bytes, bytes_to_bits


class DimensionError(ValueError):
    """Block, configuration, and topology sizes do not agree."""


class TopologyError(ValueError):
    """Requested network shape is not constructible."""


class CoverageBudgetError(RuntimeError):
    """Exhaustive coverage enumeration would exceed the given budget."""


class NetworkKind(str, Enum):
    OMEGA = "omega"
    LOG_EXTRA = "log"


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _shuffle(n: int) -> tuple[int, ...]:
    """Perfect shuffle: the value on link l moves to link rotl(l)."""
    w = n.bit_length() - 1
    return tuple(((l << 1) | (l >> (w - 1))) & (n - 1) for l in range(n))


def _invert(perm: Iterable[int]) -> tuple[int, ...]:
    perm = tuple(perm)
    inv = [0] * len(perm)
    for src, dst in enumerate(perm):
        inv[dst] = src
    return tuple(inv)


@dataclass(frozen=True)
class Topology:
    """Immutable network shape: stage count plus inter-stage wiring.

    wiring[k] is the link permutation applied between stage k and k+1
    (``stages - 1`` internal boundaries; the outermost switch columns
    face the pins directly, which is what makes the mirrored network
    realizable on the same hardware).
    """

    n: int
    kind: NetworkKind
    m: int
    stages: int
    wiring: tuple[tuple[int, ...], ...]

    @property
    def switches_per_stage(self) -> int:
        return self.n // 2

    @property
    def switch_count(self) -> int:
        return self.switches_per_stage * self.stages

    @property
    def selector_count(self) -> int:
        return 3 * self.switch_count

    @property
    def trn_bytes(self) -> int:
        return (self.selector_count + 7) // 8

    @property
    def block_bytes(self) -> int:
        return self.n // 8

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "kind": self.kind.value, "m": self.m})

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        obj = json.loads(text)
        return build_topology(int(obj["n"]), NetworkKind(obj["kind"]), int(obj["m"]))


def build_topology(n: int, kind: NetworkKind | str = NetworkKind.OMEGA, m: int = 0) -> Topology:
    """Construct a topology; selector count is 3 * (n/2) * stages."""
    kind = NetworkKind(kind)
    if not _is_pow2(n) or n < 4:
        raise TopologyError(f"block width must be a power of two >= 4, got {n}")
    if kind is NetworkKind.OMEGA:
        if m != 0:
            raise TopologyError("omega networks take no extra stages")
        stages = n.bit_length() - 1
    else:
        if m < 1:
            raise TopologyError("near non-blocking networks need at least one extra stage")
        stages = (n.bit_length() - 1) + m
    wiring = tuple(_shuffle(n) for _ in range(stages - 1))
    return Topology(n=n, kind=kind, m=m, stages=stages, wiring=wiring)


def default_log_extra(n: int) -> Topology:
    """The near non-blocking shape used by the channel: m = log2(n) - 2."""
    return build_topology(n, NetworkKind.LOG_EXTRA, (n.bit_length() - 1) - 2)


def mirror(topo: Topology) -> Topology:
    """Topology with stage order and wiring permutations reversed.

    Together with `reverse_trn` this realizes decryption on the same
    switch fabric.
    """
    wiring = tuple(_invert(w) for w in reversed(topo.wiring))
    return Topology(n=topo.n, kind=topo.kind, m=topo.m, stages=topo.stages, wiring=wiring)


class Trn:
    """Selector vector for a network: 3 bits per switch, stage-major."""

    __slots__ = ("bits", "length", "_parts")

    def __init__(self, bits: int, length: int):
        if bits < 0 or bits >> length:
            raise DimensionError(f"configuration does not fit in {length} selector bits")
        self.bits = bits
        self.length = length
        self._parts = None

    def __eq__(self, other):
        return (
            isinstance(other, Trn)
            and self.bits == other.bits
            and self.length == other.length
        )

    def __hash__(self):
        return hash((self.bits, self.length))

    def __repr__(self):
        return f"Trn({self.length} bits, {self.to_hex()})"

    @classmethod
    def zeros(cls, topo: Topology) -> "Trn":
        return cls(0, topo.selector_count)

    @classmethod
    def from_bytes(cls, data: bytes, topo: Topology) -> "Trn":
        return cls(bytes_to_bits(data, topo.selector_count), topo.selector_count)

    @classmethod
    def from_hex(cls, text: str, topo: Topology) -> "Trn":
        return cls.from_bytes(bytes.fromhex(text), topo)

    def to_bytes(self) -> bytes:
        return bits_to_bytes(self.bits, self.length)

    def to_hex(self) -> str:
        return self.to_bytes().hex()

    def bit(self, i: int) -> int:
        return (self.bits >> i) & 1

    def parts(self, topo: Topology) -> "TrnParts":
        """De-interleaved (swap, toggle0, toggle1) view; cached."""
        if self.length != topo.selector_count:
            raise DimensionError(
                f"configuration has {self.length} selectors, topology wants {topo.selector_count}"
            )
        if self._parts is None:
            self._parts = TrnParts.from_trn_bits(topo, self.bits)
        return self._parts


class TrnParts:
    """Mutable working form of a Trn: one int per selector role.

    Bit (stage * n/2 + switch) of each int holds that switch's selector.
    The protocol mutates this form in place on every data block, so the
    conversions to and from the canonical interleaved layout live here.
    """

    __slots__ = ("swap", "t0", "t1", "nbits")

    def __init__(self, swap: int, t0: int, t1: int, nbits: int):
        self.swap = swap
        self.t0 = t0
        self.t1 = t1
        self.nbits = nbits

    @classmethod
    def from_trn_bits(cls, topo: Topology, bits: int) -> "TrnParts":
        tb = _tables(topo)
        swap = t0 = t1 = 0
        for p, table in enumerate(tb.sel_tables):
            ds, d0, d1 = table[(bits >> (8 * p)) & 0xFF]
            swap |= ds
            t0 |= d0
            t1 |= d1
        return cls(swap, t0, t1, topo.switch_count)

    def to_trn(self, topo: Topology) -> Trn:
        bits = 0
        sw = topo.switches_per_stage
        for k in range(topo.stages):
            base = 3 * k * sw
            shift = k * sw
            for i in range(sw):
                sel = base + 3 * i
                bits |= ((self.swap >> (shift + i)) & 1) << sel
                bits |= ((self.t0 >> (shift + i)) & 1) << (sel + 1)
                bits |= ((self.t1 >> (shift + i)) & 1) << (sel + 2)
        return Trn(bits, topo.selector_count)

    def copy(self) -> "TrnParts":
        return TrnParts(self.swap, self.t0, self.t1, self.nbits)

    def xor_cyclic(self, topo: Topology, block: int) -> None:
        """Fold an n-bit block cyclically over the whole selector vector.

        Equivalent to XORing cyc(block) onto the interleaved selector
        bits, where cyc repeats the block to selector_count bits.
        """
        tb = _tables(topo)
        for p, table in enumerate(tb.fold_tables):
            ds, d0, d1 = table[(block >> (8 * p)) & 0xFF]
            self.swap ^= ds
            self.t0 ^= d0
            self.t1 ^= d1


class _Tables:
    """Per-topology lookup tables for the int-based evaluators."""

    __slots__ = (
        "nmask", "even", "swmask", "nperm", "perm", "inv_perm",
        "spread", "sel_tables", "fold_tables",
    )

    def __init__(self, topo: Topology):
        n = topo.n
        sw = topo.switches_per_stage
        self.nmask = (1 << n) - 1
        self.even = sum(1 << i for i in range(0, n, 2))
        self.swmask = (1 << sw) - 1
        self.nperm = topo.stages - 1
        self.perm = [self._perm_tables(w, n) for w in topo.wiring]
        self.inv_perm = [self._perm_tables(_invert(w), n) for w in topo.wiring]
        self.spread = self._spread_tables(sw)
        self.sel_tables = self._sel_tables(topo)
        self.fold_tables = self._fold_tables(topo)

    @staticmethod
    def _perm_tables(perm, n):
        nchunks = (n + 7) // 8
        tables = []
        for c in range(nchunks):
            tab = [0] * 256
            for v in range(256):
                acc = 0
                for t in range(8):
                    i = 8 * c + t
                    if i < n and (v >> t) & 1:
                        acc |= 1 << perm[i]
                tab[v] = acc
            tables.append(tab)
        return tables

    @staticmethod
    def _spread_tables(sw):
        # chunk byte of a switches-per-stage vector -> bits at even positions
        nchunks = (sw + 7) // 8
        tables = []
        for c in range(nchunks):
            tab = [0] * 256
            for v in range(256):
                acc = 0
                for t in range(8):
                    if (v >> t) & 1:
                        acc |= 1 << (2 * (8 * c + t))
                tab[v] = acc
            tables.append(tab)
        return tables

    @staticmethod
    def _sel_tables(topo):
        # interleaved selector chunk -> (swap, t0, t1) position masks
        sw = topo.switches_per_stage
        nbytes = (topo.selector_count + 7) // 8
        tables = []
        for p in range(nbytes):
            tab = [None] * 256
            for v in range(256):
                ds = d0 = d1 = 0
                for t in range(8):
                    q = 8 * p + t
                    if q >= topo.selector_count or not (v >> t) & 1:
                        continue
                    stage, r = divmod(q, 3 * sw)
                    switch, role = divmod(r, 3)
                    pos = 1 << (stage * sw + switch)
                    if role == 0:
                        ds |= pos
                    elif role == 1:
                        d0 |= pos
                    else:
                        d1 |= pos
                tab[v] = (ds, d0, d1)
            tables.append(tab)
        return tables

    @staticmethod
    def _fold_tables(topo):
        # block byte -> cyclic-fold masks over all its selector positions
        n = topo.n
        sw = topo.switches_per_stage
        sc = topo.selector_count
        tables = []
        for p in range(n // 8):
            tab = [None] * 256
            for v in range(256):
                ds = d0 = d1 = 0
                for t in range(8):
                    if not (v >> t) & 1:
                        continue
                    q = 8 * p + t
                    while q < sc:
                        stage, r = divmod(q, 3 * sw)
                        switch, role = divmod(r, 3)
                        pos = 1 << (stage * sw + switch)
                        if role == 0:
                            ds ^= pos
                        elif role == 1:
                            d0 ^= pos
                        else:
                            d1 ^= pos
                        q += n
                tab[v] = (ds, d0, d1)
            tables.append(tab)
        return tables


@lru_cache(maxsize=None)
def _tables(topo: Topology) -> _Tables:
    return _Tables(topo)


def _spread(tables, chunk: int) -> int:
    acc = 0
    for c, tab in enumerate(tables):
        acc |= tab[(chunk >> (8 * c)) & 0xFF]
    return acc


def _permute(tables, x: int) -> int:
    acc = 0
    for c, tab in enumerate(tables):
        acc |= tab[(x >> (8 * c)) & 0xFF]
    return acc


def _check_block(topo: Topology, x: int) -> None:
    if x < 0 or x >> topo.n:
        raise DimensionError(f"block does not fit in {topo.n} bits")


def forward_parts(topo: Topology, parts: TrnParts, x: int) -> int:
    """Hot-path forward evaluation on the de-interleaved configuration."""
    tb = _tables(topo)
    even = tb.even
    sw = topo.switches_per_stage
    spread = tb.spread
    for k in range(topo.stages):
        shift = k * sw
        pm = _spread(spread, (parts.swap >> shift) & tb.swmask)
        pm |= pm << 1
        tog = _spread(spread, (parts.t0 >> shift) & tb.swmask)
        tog |= _spread(spread, (parts.t1 >> shift) & tb.swmask) << 1
        crossed = ((x & even) << 1) | ((x >> 1) & even)
        x = ((x & ~pm) | (crossed & pm)) ^ tog
        if k < tb.nperm:
            x = _permute(tb.perm[k], x)
    return x


def inverse_parts(topo: Topology, parts: TrnParts, y: int) -> int:
    """Stage-order-reversed traversal: undo wiring, toggles, then swaps."""
    tb = _tables(topo)
    even = tb.even
    sw = topo.switches_per_stage
    spread = tb.spread
    for k in range(topo.stages - 1, -1, -1):
        if k < tb.nperm:
            y = _permute(tb.inv_perm[k], y)
        shift = k * sw
        tog = _spread(spread, (parts.t0 >> shift) & tb.swmask)
        tog |= _spread(spread, (parts.t1 >> shift) & tb.swmask) << 1
        y ^= tog
        pm = _spread(spread, (parts.swap >> shift) & tb.swmask)
        pm |= pm << 1
        crossed = ((y & even) << 1) | ((y >> 1) & even)
        y = (y & ~pm) | (crossed & pm)
    return y


def apply_forward(topo: Topology, trn: Trn, x: int) -> int:
    """Route, toggle, and shuffle an n-bit block through the network."""
    _check_block(topo, x)
    return forward_parts(topo, trn.parts(topo), x)


def apply_inverse(topo: Topology, trn: Trn, y: int) -> int:
    """Exact inverse of apply_forward for the same configuration."""
    _check_block(topo, y)
    return inverse_parts(topo, trn.parts(topo), y)


def reverse_trn(topo: Topology, trn: Trn) -> Trn:
    """Configuration that makes the mirrored network undo this one.

    apply_forward(mirror(topo), reverse_trn(topo, trn), apply_forward(topo, trn, x)) == x

    Stage order is reversed; each switch keeps its swap selector, and
    its toggle pair is exchanged when the swap selector is set (the
    inverse of swap-then-toggle is toggle-the-swapped-positions-then-swap).
    """
    parts = trn.parts(topo)
    sw = topo.switches_per_stage
    swmask = (1 << sw) - 1
    rswap = rt0 = rt1 = 0
    for k in range(topo.stages):
        src = (topo.stages - 1 - k) * sw
        s = (parts.swap >> src) & swmask
        t0 = (parts.t0 >> src) & swmask
        t1 = (parts.t1 >> src) & swmask
        nt0 = (t0 & ~s) | (t1 & s)
        nt1 = (t1 & ~s) | (t0 & s)
        rswap |= s << (k * sw)
        rt0 |= nt0 << (k * sw)
        rt1 |= nt1 << (k * sw)
    return TrnParts(rswap, rt0, rt1, topo.switch_count).to_trn(topo)


@dataclass(frozen=True)
class AffineModel:
    """y = A.x xor b over GF(2); columns[j] is column j of A as an int."""

    n: int
    columns: tuple[int, ...]
    offset: int

    def apply(self, x: int) -> int:
        y = self.offset
        while x:
            j = (x & -x).bit_length() - 1
            y ^= self.columns[j]
            x &= x - 1
        return y


def extract_affine(topo: Topology, trn: Trn) -> AffineModel:
    """Recover the affine representation from n + 1 forward queries."""
    parts = trn.parts(topo)
    b = forward_parts(topo, parts, 0)
    cols = tuple(forward_parts(topo, parts, 1 << j) ^ b for j in range(topo.n))
    return AffineModel(n=topo.n, columns=cols, offset=b)


def _route_indices(topo: Topology, swap_setting: int) -> tuple[int, ...]:
    """Index permutation realized by a swap-selector setting (toggles 0)."""
    n = topo.n
    sw = topo.switches_per_stage
    perm = list(range(n))
    for k in range(topo.stages):
        for i in range(sw):
            if (swap_setting >> (k * sw + i)) & 1:
                perm[2 * i], perm[2 * i + 1] = perm[2 * i + 1], perm[2 * i]
        if k < topo.stages - 1:
            w = topo.wiring[k]
            nxt = [0] * n
            for l in range(n):
                nxt[w[l]] = perm[l]
            perm = nxt
    return tuple(perm)


def permutation_coverage(
    topo: Topology,
    mode: str = "exhaustive",
    budget: int = 1 << 20,
    seed: int = 0,
) -> int:
    """Count distinct link permutations reachable by swap settings.

    Toggle selectors never move bits, only flip them, so they are held
    at zero.  Exhaustive mode enumerates all 2^(switch_count) settings
    and refuses to start past the budget; sampled mode draws `budget`
    settings at random.
    """
    import random as _random

    swapbits = topo.switch_count
    seen: set[tuple[int, ...]] = set()
    if mode == "exhaustive":
        if (1 << swapbits) > budget:
            raise CoverageBudgetError(
                f"2^{swapbits} settings exceed the budget of {budget}"
            )
        for setting in range(1 << swapbits):
            seen.add(_route_indices(topo, setting))
    elif mode == "sampled":
        rnd = _random.Random(seed)
        for _ in range(budget):
            seen.add(_route_indices(topo, rnd.getrandbits(swapbits)))
    else:
        raise ValueError(f"unknown coverage mode {mode!r}")
    return len(seen)


def block_to_bytes(topo: Topology, x: int) -> bytes:
    _check_block(topo, x)
    return bits_to_bytes(x, topo.n)


def block_from_bytes(topo: Topology, data: bytes) -> int:
    return bytes_to_bits(data, topo.n)
