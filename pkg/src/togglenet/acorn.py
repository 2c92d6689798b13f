"""ACORN-128 authenticated encryption with associated data.

Implements the 293-bit-state stream AEAD: key/nonce loading plus 1792
initialization steps, associated-data absorption, encryption, and a
768-step finalization that emits a 128-bit tag.  All byte streams use
little-endian bit loading (stream bit 8j+k is bit k of byte j), per the
cipher's specification document.

The state lives in one int, bit i = state bit S_i.  Up to 32 steps run
per big-int operation: the six in-place XOR taps, the keystream and
feedback functions, and the shift are expressed on k-bit windows, where
the window for state bit t during a k-step batch is bits [t, t+k).
Writes land at least 33 positions above every tap that may not yet see
them, so k = 32 is the largest sound batch; the few taps that would be
overwritten early (S235, S111, S66, S244, S196, S160) are captured
before the offending in-place update.

seal/open are total functions of their inputs; open verifies the tag
with a constant-shape comparison and never releases plaintext on
failure.
"""

from __future__ import annotations

import hmac

KEY_BYTES = 16
NPUB_BYTES = 16
TAG_BYTES = 16

_STATE_BITS = 293
_BATCH = 32
_M32 = (1 << 32) - 1


class AuthenticationError(Exception):
    """Tag verification failed: frame tampered or key/nonce mismatch."""


def _maj(x: int, y: int, z: int) -> int:
    return (x & y) ^ (x & z) ^ (y & z)


class _Acorn:
    __slots__ = ("w",)

    def __init__(self, key: bytes, npub: bytes):
        if len(key) != KEY_BYTES:
            raise ValueError(f"key must be {KEY_BYTES} bytes")
        if len(npub) != NPUB_BYTES:
            raise ValueError(f"npub must be {NPUB_BYTES} bytes")
        self.w = 0
        kbits = int.from_bytes(key, "little")
        nbits = int.from_bytes(npub, "little")
        # 1792 loading steps: key, npub, then key cycling with bit 256 flipped
        seq = kbits | (nbits << 128)
        for r in range(12):
            seq |= kbits << (256 + 128 * r)
        seq ^= 1 << 256
        for i in range(0, 1792, _BATCH):
            self._steps(_BATCH, (seq >> i) & _M32, _M32, _M32)

    def _steps(self, k: int, m: int, ca: int, cb: int, ct: int | None = None):
        """Advance k <= 32 steps.  m: message bits (ignored when ct given,
        in which case the decrypted bits are fed back).  Returns
        (keystream word, plaintext word)."""
        w = self.w
        mask = (1 << k) - 1
        w ^= (((w >> 235) ^ (w >> 230)) & mask) << 289
        ks235 = (w >> 235) & mask
        f244 = (w >> 244) & mask
        f196 = (w >> 196) & mask
        w ^= (((w >> 196) ^ (w >> 193)) & mask) << 230
        f160 = (w >> 160) & mask
        w ^= (((w >> 160) ^ (w >> 154)) & mask) << 193
        ks111 = (w >> 111) & mask
        w ^= (((w >> 111) ^ (w >> 107)) & mask) << 154
        ks66 = (w >> 66) & mask
        w ^= (((w >> 66) ^ (w >> 61)) & mask) << 107
        w ^= (((w >> 23) ^ w) & mask) << 61
        ks = (
            ((w >> 12) ^ (w >> 154)) & mask
        ) ^ _maj(ks235, (w >> 61) & mask, (w >> 193) & mask) ^ (
            ((w >> 230) & ks111 & mask) ^ (~(w >> 230) & ks66 & mask)
        )
        if ct is not None:
            m = (ct ^ ks) & mask
        f = (
            (w ^ ~(w >> 107)) & mask
        ) ^ _maj(f244, (w >> 23) & mask, f160) ^ (ca & f196) ^ (cb & ks)
        # XOR, not OR: the S289 in-place tap writes of steps >= 4 land in
        # the injection region and must accumulate with the new bits
        self.w = ((w ^ (((f ^ m) & mask) << 293)) >> k) & ((1 << _STATE_BITS) - 1)
        return ks, m

    def _run_pad(self, cb: int) -> None:
        # 256 steps: single 1 bit then zeros; ca drops after 128 steps
        self._steps(_BATCH, 1, _M32, cb)
        for _ in range(3):
            self._steps(_BATCH, 0, _M32, cb)
        for _ in range(4):
            self._steps(_BATCH, 0, 0, cb)

    def absorb(self, ad: bytes) -> None:
        bits = int.from_bytes(ad, "little")
        nbits = 8 * len(ad)
        for i in range(0, nbits - nbits % _BATCH, _BATCH):
            self._steps(_BATCH, (bits >> i) & _M32, _M32, _M32)
        if nbits % _BATCH:
            i = nbits - nbits % _BATCH
            self._steps(nbits % _BATCH, bits >> i, _M32, _M32)
        self._run_pad(_M32)

    def _crypt(self, data: bytes, decrypt: bool) -> bytes:
        bits = int.from_bytes(data, "little")
        nbits = 8 * len(data)
        out = 0
        pos = 0
        while pos < nbits:
            k = min(_BATCH, nbits - pos)
            word = (bits >> pos) & ((1 << k) - 1)
            if decrypt:
                ks, pt = self._steps(k, 0, _M32, 0, ct=word)
                out |= pt << pos
            else:
                ks, _ = self._steps(k, word, _M32, 0)
                out |= (word ^ ks) << pos
            pos += k
        self._run_pad(0)
        return out.to_bytes(len(data), "little")

    def finalize(self) -> bytes:
        tag = 0
        for i in range(768 // _BATCH):
            ks, _ = self._steps(_BATCH, 0, _M32, _M32)
            if i >= 20:                   # last 128 of 768 steps
                tag |= ks << (32 * (i - 20))
        return tag.to_bytes(TAG_BYTES, "little")


def seal(key: bytes, npub: bytes, ad: bytes, plaintext: bytes) -> tuple[bytes, bytes]:
    """Encrypt and authenticate; returns (ciphertext, 128-bit tag)."""
    st = _Acorn(key, npub)
    st.absorb(ad)
    ct = st._crypt(plaintext, decrypt=False)
    return ct, st.finalize()


def open_(key: bytes, npub: bytes, ad: bytes, ciphertext: bytes, tag: bytes) -> bytes:
    """Decrypt and verify; raises AuthenticationError on any mismatch."""
    st = _Acorn(key, npub)
    st.absorb(ad)
    pt = st._crypt(ciphertext, decrypt=True)
    if not hmac.compare_digest(st.finalize(), tag):
        raise AuthenticationError("tag verification failed")
    return pt
