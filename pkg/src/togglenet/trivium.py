"""Trivium stream cipher (80-bit key, 80-bit IV, 288-bit state).

Keystream agrees bit-for-bit with the published algorithm: state bits
s1..s93, s94..s177, s178..s288; taps s66^s93, s162^s177, s243^s288 make
the output bit; quadratic feedback (s91&s92)^s171, (s175&s176)^s264,
(s286&s287)^s69 rotates the three registers; 4*288 blank rounds warm
the state up.

Loading and output conventions: key bit i (i = 0 the most significant
bit of the first key byte) lands in s_{i+1}, IV bit i in s_{94+i},
s286..s288 start at 1; keystream bit 0 is the most significant bit of
the first output byte.

The implementation advances up to 64 steps per big-int operation.  Each
register is held with its oldest bit at bit 0, so a tap s_t reads the
window starting at (register_length - offset) and j further steps read
j bits higher; new bits are appended above the register top and a
single shift retires the batch.  64 steps fit because every tap sits at
least 66 positions below the insertion point.
"""

from __future__ import annotations

from ._bits import REV8

KEY_BYTES = 10
IV_BYTES = 10
WARMUP_STEPS = 4 * 288
_BATCH = 64


class NotWarmedError(RuntimeError):
    """Keystream requested before the initialization rounds ran."""


class Trivium:
    __slots__ = ("_a", "_b", "_c", "warmed")

    def __init__(self, key: bytes, iv: bytes):
        if len(key) != KEY_BYTES:
            raise ValueError(f"key must be {KEY_BYTES} bytes")
        if len(iv) != IV_BYTES:
            raise ValueError(f"iv must be {IV_BYTES} bytes")
        a = b = 0
        for i in range(80):
            bit = (key[i >> 3] >> (7 - (i & 7))) & 1
            a |= bit << (92 - i)          # s_{i+1} at register-A bit 93-(i+1)
            bit = (iv[i >> 3] >> (7 - (i & 7))) & 1
            b |= bit << (83 - i)          # s_{94+i} at register-B bit 177-(94+i)
        self._a = a
        self._b = b
        self._c = 0b111                   # s286..s288
        self.warmed = False

    @classmethod
    def warmed_up(cls, key: bytes, iv: bytes) -> "Trivium":
        t = cls(key, iv)
        t.warm_up()
        return t

    def warm_up(self) -> None:
        for _ in range(WARMUP_STEPS // _BATCH):
            self._advance(_BATCH)
        self.warmed = True

    def _advance(self, k: int) -> int:
        """Run k <= 64 steps; returns the keystream word (bit j = step j)."""
        a, b, c = self._a, self._b, self._c
        mask = (1 << k) - 1
        t1 = ((a >> 27) ^ a) & mask                      # s66 ^ s93
        t2 = ((b >> 15) ^ b) & mask                      # s162 ^ s177
        t3 = ((c >> 45) ^ c) & mask                      # s243 ^ s288
        z = t1 ^ t2 ^ t3
        na = t3 ^ ((c >> 2) & (c >> 1)) ^ (a >> 24)      # (s286&s287) ^ s69
        nb = t1 ^ ((a >> 2) & (a >> 1)) ^ (b >> 6)       # (s91&s92) ^ s171
        nc = t2 ^ ((b >> 2) & (b >> 1)) ^ (c >> 24)      # (s175&s176) ^ s264
        self._a = (a | ((na & mask) << 93)) >> k
        self._b = (b | ((nb & mask) << 84)) >> k
        self._c = (c | ((nc & mask) << 111)) >> k
        return z

    def keystream(self, nbytes: int) -> bytes:
        if not self.warmed:
            raise NotWarmedError("run warm_up() before drawing keystream")
        out = bytearray(nbytes)
        pos = 0
        while pos < nbytes:
            take = min(_BATCH // 8, nbytes - pos)
            z = self._advance(8 * take)
            for j in range(take):
                out[pos + j] = REV8[(z >> (8 * j)) & 0xFF]
            pos += take
        return bytes(out)

    def keystream_bits(self, nbits: int) -> int:
        """nbits of keystream as an int, stream bit i at int bit i."""
        if not self.warmed:
            raise NotWarmedError("run warm_up() before drawing keystream")
        acc = 0
        pos = 0
        while pos < nbits:
            take = min(_BATCH, nbits - pos)
            acc |= self._advance(take) << pos
            pos += take
        return acc
