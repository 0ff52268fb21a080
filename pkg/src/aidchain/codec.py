"""Canonical binary encoding primitives.

Every byte layout that ends up inside a hash (state roots, transaction
hashes, block hashes, consensus message digests) is built from these
helpers: big-endian fixed-width integers and length-prefixed byte
strings, no padding, no self-describing framing. Two encoders producing
different bytes for the same value is a consensus bug, so keep this
module boring.
"""

from __future__ import annotations

import struct


class CodecError(ValueError):
    """Malformed or truncated canonical encoding."""


U64_MAX = 2**64 - 1
U128_MAX = 2**128 - 1


class Writer:
    """Accumulates canonical bytes."""

    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def u8(self, value: int) -> "Writer":
        self._parts.append(struct.pack(">B", value))
        return self

    def u32(self, value: int) -> "Writer":
        self._parts.append(struct.pack(">I", value))
        return self

    def u64(self, value: int) -> "Writer":
        if not 0 <= value <= U64_MAX:
            raise CodecError(f"u64 out of range: {value}")
        self._parts.append(struct.pack(">Q", value))
        return self

    def u128(self, value: int) -> "Writer":
        if not 0 <= value <= U128_MAX:
            raise CodecError(f"u128 out of range: {value}")
        self._parts.append(value.to_bytes(16, "big"))
        return self

    def raw(self, data: bytes, expect_len: int | None = None) -> "Writer":
        if expect_len is not None and len(data) != expect_len:
            raise CodecError(f"expected {expect_len} bytes, got {len(data)}")
        self._parts.append(data)
        return self

    def var_bytes(self, data: bytes) -> "Writer":
        self.u32(len(data))
        self._parts.append(data)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    """Consumes canonical bytes, raising CodecError on truncation."""

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0

    def _take(self, n: int) -> bytes:
        end = self._pos + n
        if end > len(self._data):
            raise CodecError("truncated encoding")
        chunk = self._data[self._pos:end]
        self._pos = end
        return chunk

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self._take(8))[0]

    def u128(self) -> int:
        return int.from_bytes(self._take(16), "big")

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def var_bytes(self, max_len: int = 1 << 24) -> bytes:
        n = self.u32()
        if n > max_len:
            raise CodecError(f"length prefix {n} exceeds limit {max_len}")
        return self._take(n)

    def remaining(self) -> int:
        return len(self._data) - self._pos

    def expect_end(self) -> None:
        if self._pos != len(self._data):
            raise CodecError(f"{self.remaining()} trailing bytes")
