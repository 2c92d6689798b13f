"""Bit-order helpers shared by the network and protocol layers.

Bit vectors live in Python ints with vector index i at int bit i (LSB
first).  On the wire and in hex dumps the convention is the opposite:
index 0 is the most significant bit of the first byte.  The rev8 table
bridges the two.
"""

REV8 = tuple(int(f"{b:08b}"[::-1], 2) for b in range(256))


def bits_to_bytes(bits: int, length: int) -> bytes:
    """Pack a length-bit vector (index i at int bit i) MSB-first."""
    if bits < 0 or bits >> length:
        raise ValueError(f"value does not fit in {length} bits")
    nbytes = (length + 7) // 8
    return bytes(REV8[(bits >> (8 * p)) & 0xFF] for p in range(nbytes))


def bytes_to_bits(data: bytes, length: int) -> int:
    """Inverse of bits_to_bytes; rejects data of the wrong size."""
    nbytes = (length + 7) // 8
    if len(data) != nbytes:
        raise ValueError(f"expected {nbytes} bytes for {length} bits, got {len(data)}")
    bits = 0
    for p, byte in enumerate(data):
        bits |= REV8[byte] << (8 * p)
    return bits & ((1 << length) - 1)
