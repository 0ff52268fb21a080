"""Hashing, keys, addresses and transaction signatures."""

from .keccak import BACKEND as KECCAK_BACKEND, keccak256
from .keys import read_keyfile, write_keyfile
from .signing import (
    VERIFY_BACKEND,
    InvalidPointError,
    KeyPair,
    Signature,
    derive_address,
    sign_digest,
    sign_tx,
    verify_digest,
    verify_tx,
)

__all__ = [
    "KECCAK_BACKEND",
    "VERIFY_BACKEND",
    "InvalidPointError",
    "KeyPair",
    "Signature",
    "derive_address",
    "keccak256",
    "read_keyfile",
    "sign_digest",
    "sign_tx",
    "verify_digest",
    "verify_tx",
    "write_keyfile",
]
