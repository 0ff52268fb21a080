# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Keccak-256 kernel (original Keccak padding, 1088-bit rate).

Hot path for every transaction hash, block hash, state root and
consensus message digest; selected by aidchain.crypto.keccak when the
build produced this extension.
"""

from libc.stdint cimport uint64_t, uint8_t
from libc.string cimport memset

cdef uint64_t[24] RC
RC[0] = 0x0000000000000001ULL; RC[1] = 0x0000000000008082ULL
RC[2] = 0x800000000000808AULL; RC[3] = 0x8000000080008000ULL
RC[4] = 0x000000000000808BULL; RC[5] = 0x0000000080000001ULL
RC[6] = 0x8000000080008081ULL; RC[7] = 0x8000000000008009ULL
RC[8] = 0x000000000000008AULL; RC[9] = 0x0000000000000088ULL
RC[10] = 0x0000000080008009ULL; RC[11] = 0x000000008000000AULL
RC[12] = 0x000000008000808BULL; RC[13] = 0x800000000000008BULL
RC[14] = 0x8000000000008089ULL; RC[15] = 0x8000000000008003ULL
RC[16] = 0x8000000000008002ULL; RC[17] = 0x8000000000000080ULL
RC[18] = 0x000000000000800AULL; RC[19] = 0x800000008000000AULL
RC[20] = 0x8000000080008081ULL; RC[21] = 0x8000000000008080ULL
RC[22] = 0x0000000080000001ULL; RC[23] = 0x8000000080008008ULL

# rho rotation offsets, lane index x + 5*y
cdef int[25] ROT
ROT[0] = 0;  ROT[1] = 1;   ROT[2] = 62;  ROT[3] = 28;  ROT[4] = 27
ROT[5] = 36; ROT[6] = 44;  ROT[7] = 6;   ROT[8] = 55;  ROT[9] = 20
ROT[10] = 3; ROT[11] = 10; ROT[12] = 43; ROT[13] = 25; ROT[14] = 39
ROT[15] = 41; ROT[16] = 45; ROT[17] = 15; ROT[18] = 21; ROT[19] = 8
ROT[20] = 18; ROT[21] = 2;  ROT[22] = 61; ROT[23] = 56; ROT[24] = 14

cdef enum:
    RATE = 136


cdef inline uint64_t rotl(uint64_t v, int r) nogil:
    if r == 0:
        return v
    return (v << r) | (v >> (64 - r))


cdef void keccak_f(uint64_t *a) nogil:
    cdef uint64_t[5] c
    cdef uint64_t[25] b
    cdef uint64_t t
    cdef int rnd, x, y, i
    for rnd in range(24):
        # theta
        for x in range(5):
            c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20]
        for x in range(5):
            t = c[(x + 4) % 5] ^ rotl(c[(x + 1) % 5], 1)
            for y in range(0, 25, 5):
                a[x + y] ^= t
        # rho + pi
        for x in range(5):
            for y in range(5):
                i = x + 5 * y
                b[y + 5 * ((2 * x + 3 * y) % 5)] = rotl(a[i], ROT[i])
        # chi
        for y in range(0, 25, 5):
            for x in range(5):
                c[x] = b[y + x]
            for x in range(5):
                a[y + x] = c[x] ^ ((~c[(x + 1) % 5]) & c[(x + 2) % 5])
        # iota
        a[0] ^= RC[rnd]


cdef inline uint64_t load64(const uint8_t *p) nogil:
    cdef uint64_t v = 0
    cdef int i
    for i in range(8):
        v |= (<uint64_t> p[i]) << (8 * i)
    return v


def keccak256(data: bytes) -> bytes:
    """Keccak-256 digest of ``data`` (32 bytes)."""
    cdef const uint8_t *src = data
    cdef Py_ssize_t length = len(data)
    cdef uint64_t[25] lanes
    cdef uint8_t[RATE] block
    cdef Py_ssize_t offset = 0
    cdef int i, j
    memset(<void *> lanes, 0, sizeof(lanes))
    while length - offset >= RATE:
        for j in range(17):
            lanes[j] ^= load64(src + offset + 8 * j)
        keccak_f(lanes)
        offset += RATE
    memset(<void *> block, 0, RATE)
    for j in range(<int> (length - offset)):
        block[j] = src[offset + j]
    block[length - offset] ^= 0x01
    block[RATE - 1] ^= 0x80
    for j in range(17):
        lanes[j] ^= load64(block + 8 * j)
    keccak_f(lanes)
    cdef uint8_t[32] out
    for j in range(4):
        for i in range(8):
            out[8 * j + i] = <uint8_t> ((lanes[j] >> (8 * i)) & 0xFF)
    return bytes(out[:32])
