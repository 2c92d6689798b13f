"""Involutional byte substitution applied after the network.

The table is the published Khazad S-box, embedded verbatim.  It is an
involution (table[table[x]] == x), so the same table decodes on the
receive path; that is what lets one lookup unit serve both directions.
The table is pseudo-randomly generated from two involutional 4-bit
mini-boxes P and Q through a three-level palindromic structure; the
mini-boxes are kept here so the constant can be audited by regeneration.
"""

from __future__ import annotations

import hashlib

KHAZAD_SBOX = bytes.fromhex(
    "ba542f7453d3d24d50ac8dbf70529a4c"
    "ead597d133515ba6de48a899db32b7fc"
    "e39e919be2bb416ea5cb6b95a1f3b102"
    "ccc41d14c363da5d5fdc7dcd7f5a6c5c"
    "f726ffede89d6f8e19a0f0890f07affb"
    "08150d040164df7679dd3d163f376d38"
    "b973e93555717b8c7288f62a3e5e2746"
    "0c65686103c157d6d958d866d73ac83c"
    "fa96a798ecb8c7ae694baba9670a47f2"
    "b522e5eebe2b8112831b0e23f54521ce"
    "492cf9e6b62817821a8bfe8a09c9874e"
    "e12ee4e0eb90a41e85600025f4f1940b"
    "e775ef3431d4d0867eadfd29303b9ff8"
    "c6130605c511777c7a78361c39591856"
    "b3b02420b292a3c0446210b4844393c2"
    "4abd8f2dbc9c6a40cfa2804f1fcaaa42"
)

KHAZAD_SBOX_SHA256 = "f2b9e44bdb40b0d135b693d675609b8f24088cc64376231501b9cdd4157cab58"

MINIBOX_P = (0x3, 0xF, 0xE, 0x0, 0x5, 0x4, 0xB, 0xC, 0xD, 0xA, 0x9, 0x6, 0x7, 0x8, 0x2, 0x1)
MINIBOX_Q = (0x9, 0xE, 0x5, 0x6, 0xA, 0x2, 0x3, 0xC, 0xF, 0x0, 0x4, 0xD, 0x7, 0xB, 0x1, 0x8)


class BlockWidthError(ValueError):
    """Substitution needs a whole number of bytes."""


def generate_table() -> bytes:
    """Rebuild the S-box from the mini-boxes (audit path, not the hot path)."""

    def one(x: int) -> int:
        h, l = x >> 4, x & 0xF
        h, l = MINIBOX_P[h], MINIBOX_Q[l]
        h, l = (h & 0xC) | (l >> 2), ((h & 3) << 2) | (l & 3)
        h, l = MINIBOX_Q[h], MINIBOX_P[l]
        h, l = (h & 0xC) | (l >> 2), ((h & 3) << 2) | (l & 3)
        h, l = MINIBOX_P[h], MINIBOX_Q[l]
        return (h << 4) | l

    return bytes(one(x) for x in range(256))


def table_checksum(table: bytes = KHAZAD_SBOX) -> str:
    return hashlib.sha256(table).hexdigest()


def table_hex(table: bytes = KHAZAD_SBOX) -> str:
    """256 hex bytes for audit."""
    return table.hex()


def substitute_bytes(data: bytes, table: bytes = KHAZAD_SBOX) -> bytes:
    return data.translate(table)


def substitute(block: int, width: int, table: bytes = KHAZAD_SBOX) -> int:
    """Replace each byte of a width-bit block through the table.

    Block bit i rides in byte i // 8, most significant bit first,
    matching the network's wire convention.  Involutional table makes
    this function its own inverse.
    """
    if width % 8 != 0:
        raise BlockWidthError(f"block width {width} is not a multiple of 8")
    if block < 0 or block >> width:
        raise BlockWidthError(f"block does not fit in {width} bits")
    from ._bits import bits_to_bytes, bytes_to_bits

    return bytes_to_bits(bits_to_bytes(block, width).translate(table), width)
