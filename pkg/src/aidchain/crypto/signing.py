"""Deterministic ECDSA over secp256k1 with keccak-256 message hashing.

Signing is always the pure-Python RFC 6979 path so that identical
inputs yield identical signatures regardless of what is installed.
Verification prefers the OpenSSL backend (via the cryptography package)
for speed and falls back to pure Python; AIDCHAIN_PURE_CRYPTO=1 forces
the fallback. Signatures are canonical low-s only and carry the
signer's 64-byte uncompressed public key.
"""

from __future__ import annotations

import hashlib
import hmac
import os
import secrets
from dataclasses import dataclass
from functools import lru_cache

from . import curve
from .keccak import keccak256


class InvalidPointError(ValueError):
    """Public key bytes do not describe a point on secp256k1."""


@dataclass(frozen=True)
class KeyPair:
    secret: int
    public_key: bytes  # 64 bytes, x || y

    @property
    def address(self) -> bytes:
        return derive_address(self.public_key)

    @classmethod
    def from_secret(cls, secret: int) -> "KeyPair":
        if not 1 <= secret < curve.N:
            raise ValueError("secret scalar out of range")
        x, y = curve.to_affine(curve.mult_base(secret))
        return cls(secret, x.to_bytes(32, "big") + y.to_bytes(32, "big"))

    @classmethod
    def generate(cls) -> "KeyPair":
        while True:
            secret = secrets.randbits(256)
            if 1 <= secret < curve.N:
                return cls.from_secret(secret)

    @classmethod
    def from_seed(cls, seed: bytes) -> "KeyPair":
        """Deterministic keypair; hashes the seed until a valid scalar."""
        material = seed
        while True:
            material = keccak256(material)
            secret = int.from_bytes(material, "big")
            if 1 <= secret < curve.N:
                return cls.from_secret(secret)


@dataclass(frozen=True)
class Signature:
    r: int
    s: int
    public_key: bytes  # signer's 64-byte point, carried in lieu of recovery

    def encode(self) -> bytes:
        return self.r.to_bytes(32, "big") + self.s.to_bytes(32, "big")

    @classmethod
    def decode(cls, data: bytes, public_key: bytes) -> "Signature":
        if len(data) != 64:
            raise ValueError("signature must be 64 bytes")
        return cls(
            int.from_bytes(data[:32], "big"),
            int.from_bytes(data[32:], "big"),
            public_key,
        )


def _decode_point(public_key: bytes) -> tuple[int, int]:
    if len(public_key) != 64:
        raise InvalidPointError("public key must be 64 bytes")
    x = int.from_bytes(public_key[:32], "big")
    y = int.from_bytes(public_key[32:], "big")
    if not curve.is_on_curve(x, y):
        raise InvalidPointError("point not on curve")
    return x, y


def derive_address(public_key: bytes) -> bytes:
    """Last 20 bytes of keccak256(x || y)."""
    _decode_point(public_key)
    return keccak256(public_key)[12:]


def _rfc6979_nonce(secret: int, digest: bytes) -> int:
    """Deterministic nonce per RFC 6979 with HMAC-SHA256."""
    x = secret.to_bytes(32, "big")
    h1 = int.from_bytes(digest, "big") % curve.N
    msg = h1.to_bytes(32, "big")
    v = b"\x01" * 32
    k = b"\x00" * 32
    k = hmac.new(k, v + b"\x00" + x + msg, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    k = hmac.new(k, v + b"\x01" + x + msg, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    while True:
        v = hmac.new(k, v, hashlib.sha256).digest()
        nonce = int.from_bytes(v, "big")
        if 1 <= nonce < curve.N:
            return nonce
        k = hmac.new(k, v + b"\x00", hashlib.sha256).digest()
        v = hmac.new(k, v, hashlib.sha256).digest()


def sign_digest(keypair: KeyPair, digest: bytes) -> Signature:
    """Sign a 32-byte digest; always low-s canonical."""
    if len(digest) != 32:
        raise ValueError("digest must be 32 bytes")
    z = int.from_bytes(digest, "big") % curve.N
    while True:
        k = _rfc6979_nonce(keypair.secret, digest)
        rx, _ = curve.to_affine(curve.mult_base(k))
        r = rx % curve.N
        if r == 0:
            digest = keccak256(digest)  # astronomically unlikely; re-derive
            continue
        s = pow(k, -1, curve.N) * (z + r * keypair.secret) % curve.N
        if s == 0:
            digest = keccak256(digest)
            continue
        if s > curve.N // 2:
            s = curve.N - s
        return Signature(r, s, keypair.public_key)


def _verify_pure(r: int, s: int, public_key: bytes, digest: bytes) -> bool:
    try:
        qx, qy = _decode_point(public_key)
    except InvalidPointError:
        return False
    z = int.from_bytes(digest, "big") % curve.N
    sinv = pow(s, -1, curve.N)
    u1 = z * sinv % curve.N
    u2 = r * sinv % curve.N
    pt = curve.jac_add(curve.mult_base(u1), curve.mult_point(u2, qx, qy))
    if pt[2] == 0:
        return False
    x, _ = curve.to_affine(pt)
    return x % curve.N == r


_openssl = None
if not os.environ.get("AIDCHAIN_PURE_CRYPTO"):
    try:
        from cryptography.exceptions import InvalidSignature as _InvalidSig
        from cryptography.hazmat.primitives import hashes as _hashes
        from cryptography.hazmat.primitives.asymmetric import ec as _ec
        from cryptography.hazmat.primitives.asymmetric.utils import (
            Prehashed as _Prehashed,
            encode_dss_signature as _encode_dss,
        )

        _openssl = {
            "algo": _ec.ECDSA(_Prehashed(_hashes.SHA256())),
        }

        @lru_cache(maxsize=4096)
        def _openssl_pubkey(public_key: bytes):
            return _ec.EllipticCurvePublicKey.from_encoded_point(
                _ec.SECP256K1(), b"\x04" + public_key
            )

        def _verify_openssl(r: int, s: int, public_key: bytes, digest: bytes) -> bool:
            try:
                key = _openssl_pubkey(public_key)
                key.verify(_encode_dss(r, s), digest, _openssl["algo"])
                return True
            except (_InvalidSig, ValueError):
                return False

    except ImportError:
        _openssl = None

VERIFY_BACKEND = "openssl" if _openssl else "pure-python"


@lru_cache(maxsize=1 << 16)
def _verify_cached(r: int, s: int, public_key: bytes, digest: bytes) -> bool:
    if _openssl is not None:
        return _verify_openssl(r, s, public_key, digest)
    return _verify_pure(r, s, public_key, digest)


def verify_digest(signature: Signature, digest: bytes) -> bool:
    """True iff the signature is canonical and valid for the carried key.

    High-s twins are rejected outright, before any curve math.
    """
    if len(digest) != 32:
        return False
    r, s = signature.r, signature.s
    if not (1 <= r < curve.N and 1 <= s <= curve.N // 2):
        return False
    if len(signature.public_key) != 64:
        return False
    return _verify_cached(r, s, signature.public_key, digest)


def sign_tx(keypair: KeyPair, tx_bytes: bytes) -> Signature:
    """Sign the keccak-256 digest of canonical transaction bytes."""
    return sign_digest(keypair, keccak256(tx_bytes))


def verify_tx(signature: Signature, tx_bytes: bytes, claimed_sender: bytes) -> bool:
    """Signature valid and the carried key's address matches the sender."""
    if not verify_digest(signature, keccak256(tx_bytes)):
        return False
    try:
        return derive_address(signature.public_key) == claimed_sender
    except InvalidPointError:
        return False
