import random

import pytest

from aidchain.crypto import _keccak_py, keccak256
from reference_keccak import keccak256_oracle

# Published Keccak-256 vectors (pre-standardization padding).
VECTORS = [
    (b"", "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"),
    (b"abc", "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45"),
    (b"testing", "5f16f4c7f149ac4f9510d9cf8cf384038ad348b3bcdc01915f95de12df9d1b02"),
    (
        b"The quick brown fox jumps over the lazy dog",
        "4d741b6f1eb29cb2a9b9911c82f56fa8d73b04959d3d9d222895df6c0b28aa15",
    ),
    (
        b"The quick brown fox jumps over the lazy dog.",
        "578951e24efd62a3d63a86f7cd19aaa53c898fe287d2552133220370240b572d",
    ),
]

BACKENDS = [keccak256, _keccak_py.keccak256]


@pytest.mark.parametrize("impl", BACKENDS, ids=["selected", "pure"])
@pytest.mark.parametrize("message,expected", VECTORS, ids=[v[0][:12].decode() or "empty" for v in VECTORS])
def test_published_vectors(impl, message, expected):
    assert impl(message).hex() == expected


@pytest.mark.parametrize("message,expected", VECTORS)
def test_oracle_agrees_with_published_vectors(message, expected):
    assert keccak256_oracle(message).hex() == expected


@pytest.mark.parametrize("impl", BACKENDS, ids=["selected", "pure"])
def test_random_cross_check_against_oracle(impl):
    rng = random.Random(20240)
    for _ in range(1000):
        data = rng.randbytes(rng.randrange(0, 300))
        assert impl(data) == keccak256_oracle(data)


@pytest.mark.parametrize("impl", BACKENDS, ids=["selected", "pure"])
def test_rate_boundary_lengths(impl):
    # single-block / pad-only-byte / multi-block boundaries
    for n in (0, 1, 135, 136, 137, 271, 272, 273, 1000):
        data = bytes(range(256)) * 4
        assert impl(data[:n]) == keccak256_oracle(data[:n])


def test_digest_width():
    rng = random.Random(7)
    for _ in range(1000):
        assert len(keccak256(rng.randbytes(rng.randrange(0, 64)))) == 32
