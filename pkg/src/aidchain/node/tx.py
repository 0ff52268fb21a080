"""Signed, nonce-carrying transaction envelope around one contract payload."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from ..codec import Reader, Writer
from ..crypto import KeyPair, Signature, derive_address, keccak256, sign_digest, verify_digest
from ..ledger import Payload, encode_payload, read_payload


@dataclass(frozen=True)
class Transaction:
    """Wire object binding (sender, nonce, payload) to a signature.

    The signature covers the signing prefix (sender, nonce, payload);
    the carried public key is bound to the sender by address derivation.
    Nonces are strictly sequential per sender starting at zero and are
    consumed even by transactions whose contract-level effect fails.
    """

    sender: bytes
    nonce: int
    payload: Payload
    signature: Signature

    @property
    def public_key(self) -> bytes:
        return self.signature.public_key

    def signing_bytes(self) -> bytes:
        return signing_bytes(self.sender, self.nonce, self.payload)

    def encode(self) -> bytes:
        w = Writer()
        w.raw(self.sender, expect_len=20)
        w.u64(self.nonce)
        w.var_bytes(encode_payload(self.payload))
        w.raw(self.signature.public_key, expect_len=64)
        w.raw(self.signature.encode(), expect_len=64)
        return w.getvalue()

    @classmethod
    def decode(cls, data: bytes) -> "Transaction":
        r = Reader(data)
        tx = cls.read(r)
        r.expect_end()
        return tx

    @classmethod
    def read(cls, r: Reader) -> "Transaction":
        sender = r.raw(20)
        nonce = r.u64()
        payload_bytes = r.var_bytes()
        payload_reader = Reader(payload_bytes)
        payload = read_payload(payload_reader)
        payload_reader.expect_end()
        public_key = r.raw(64)
        signature = Signature.decode(r.raw(64), public_key)
        return cls(sender, nonce, payload, signature)

    def verify(self) -> bool:
        digest = keccak256(self.signing_bytes())
        if not verify_digest(self.signature, digest):
            return False
        try:
            return derive_address(self.public_key) == self.sender
        except ValueError:
            return False


def signing_bytes(sender: bytes, nonce: int, payload: Payload) -> bytes:
    w = Writer()
    w.raw(sender, expect_len=20)
    w.u64(nonce)
    w.var_bytes(encode_payload(payload))
    return w.getvalue()


def build_tx(keypair: KeyPair, nonce: int, payload: Payload) -> Transaction:
    """Sign a payload with auto-derived sender address."""
    sender = keypair.address
    digest = keccak256(signing_bytes(sender, nonce, payload))
    return Transaction(sender, nonce, payload, sign_digest(keypair, digest))


@lru_cache(maxsize=1 << 14)
def _hash_of(encoded: bytes) -> bytes:
    return keccak256(encoded)


def tx_hash(tx: Transaction) -> bytes:
    """keccak-256 of the full canonical encoding."""
    return _hash_of(tx.encode())
