"""Pure-Python Keccak-256 fallback.

Original Keccak padding (0x01 ... 0x80), not the SHA-3 variant. This is
the import-time fallback when the compiled kernel is unavailable; it is
correct but roughly two orders of magnitude slower, so anything
performance-sensitive should go through aidchain.crypto.keccak which
prefers the extension.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1

_ROUND_CONSTANTS = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A,
    0x8000000080008000, 0x000000000000808B, 0x0000000080000001,
    0x8000000080008081, 0x8000000000008009, 0x000000000000008A,
    0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089,
    0x8000000000008003, 0x8000000000008002, 0x8000000000000080,
    0x000000000000800A, 0x800000008000000A, 0x8000000080008081,
    0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)

# Rotation offset for lane index x + 5*y.
_ROTATIONS = (
    0, 1, 62, 28, 27,
    36, 44, 6, 55, 20,
    3, 10, 43, 25, 39,
    41, 45, 15, 21, 8,
    18, 2, 61, 56, 14,
)

_RATE = 136  # 1088-bit rate for 256-bit output


def _keccak_f(lanes: list[int]) -> None:
    """keccak-f[1600] permutation over 25 lanes, in place."""
    for rc in _ROUND_CONSTANTS:
        # theta
        c = [
            lanes[x] ^ lanes[x + 5] ^ lanes[x + 10] ^ lanes[x + 15] ^ lanes[x + 20]
            for x in range(5)
        ]
        for x in range(5):
            t = c[(x - 1) % 5] ^ (
                ((c[(x + 1) % 5] << 1) | (c[(x + 1) % 5] >> 63)) & _MASK
            )
            for y in range(0, 25, 5):
                lanes[x + y] ^= t
        # rho + pi
        b = [0] * 25
        for x in range(5):
            for y in range(5):
                v = lanes[x + 5 * y]
                r = _ROTATIONS[x + 5 * y]
                b[y + 5 * ((2 * x + 3 * y) % 5)] = (
                    ((v << r) | (v >> (64 - r))) & _MASK
                )
        # chi
        for y in range(0, 25, 5):
            row = b[y:y + 5]
            for x in range(5):
                lanes[y + x] = row[x] ^ ((~row[(x + 1) % 5]) & row[(x + 2) % 5])
        # iota
        lanes[0] ^= rc


def keccak256(data: bytes) -> bytes:
    """Keccak-256 digest of ``data`` (32 bytes)."""
    lanes = [0] * 25
    # absorb full rate-sized blocks
    n_full = len(data) // _RATE
    for i in range(n_full):
        block = data[i * _RATE:(i + 1) * _RATE]
        for j in range(17):  # 136 / 8 lanes
            lanes[j] ^= int.from_bytes(block[j * 8:j * 8 + 8], "little")
        _keccak_f(lanes)
    # final padded block
    tail = bytearray(data[n_full * _RATE:])
    pad_start = len(tail)
    tail.extend(b"\x00" * (_RATE - pad_start))
    tail[pad_start] ^= 0x01
    tail[_RATE - 1] ^= 0x80
    for j in range(17):
        lanes[j] ^= int.from_bytes(tail[j * 8:j * 8 + 8], "little")
    _keccak_f(lanes)
    # squeeze 32 bytes (4 lanes)
    return b"".join(lanes[j].to_bytes(8, "little") for j in range(4))
