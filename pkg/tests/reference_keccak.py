"""Independent Keccak-256 oracle for cross-checking the shipped kernels.

Deliberately written from the permutation's definition rather than from
tables: round constants come from the degree-8 LFSR, rotation offsets
from the (t+1)(t+2)/2 walk, and the state is a dict keyed by (x, y).
Slow and naive on purpose; it shares no code or constants with
aidchain.crypto.
"""


def _round_constants() -> list[int]:
    def bits():
        r = 1
        while True:
            yield r & 1
            r <<= 1
            if r & 0x100:
                r ^= 0x171  # x^8 + x^6 + x^5 + x^4 + 1

    gen = bits()
    stream = [next(gen) for _ in range(24 * 7)]
    constants = []
    for ir in range(24):
        rc = 0
        for j in range(7):
            if stream[j + 7 * ir]:
                rc ^= 1 << (2**j - 1)
        constants.append(rc)
    return constants


def _rotation_offsets() -> dict[tuple[int, int], int]:
    offsets = {(0, 0): 0}
    x, y = 1, 0
    for t in range(24):
        offsets[(x, y)] = ((t + 1) * (t + 2) // 2) % 64
        x, y = y, (2 * x + 3 * y) % 5
    return offsets


_RC = _round_constants()
_OFFSETS = _rotation_offsets()
_M = (1 << 64) - 1


def _rot(v: int, n: int) -> int:
    n %= 64
    return ((v << n) | (v >> (64 - n))) & _M


def _permute(a: dict) -> dict:
    for rc in _RC:
        c = {x: a[(x, 0)] ^ a[(x, 1)] ^ a[(x, 2)] ^ a[(x, 3)] ^ a[(x, 4)] for x in range(5)}
        d = {x: c[(x - 1) % 5] ^ _rot(c[(x + 1) % 5], 1) for x in range(5)}
        a = {(x, y): a[(x, y)] ^ d[x] for x in range(5) for y in range(5)}
        b = {((y % 5), ((2 * x + 3 * y) % 5)): _rot(a[(x, y)], _OFFSETS[(x, y)])
             for x in range(5) for y in range(5)}
        a = {(x, y): b[(x, y)] ^ ((b[((x + 1) % 5, y)] ^ _M) & b[((x + 2) % 5, y)])
             for x in range(5) for y in range(5)}
        a[(0, 0)] ^= rc
    return a


def keccak256_oracle(message: bytes) -> bytes:
    rate = 136
    padded = bytearray(message)
    pad_len = rate - (len(padded) % rate)
    padded += b"\x01" + b"\x00" * (pad_len - 2) + b"\x80" if pad_len >= 2 else b"\x81"
    state = {(x, y): 0 for x in range(5) for y in range(5)}
    for block_start in range(0, len(padded), rate):
        block = padded[block_start:block_start + rate]
        for i in range(rate // 8):
            lane = int.from_bytes(block[8 * i:8 * i + 8], "little")
            state[(i % 5, i // 5)] ^= lane
        state = _permute(state)
    out = b""
    for i in range(4):
        out += state[(i % 5, i // 5)].to_bytes(8, "little")
    return out
