"""Flat key files: hex secret plus derived address, mode 0600."""

from __future__ import annotations

import json
import os
from pathlib import Path

from .signing import KeyPair


def write_keyfile(path: str | Path, keypair: KeyPair) -> None:
    path = Path(path)
    payload = {
        "secret": keypair.secret.to_bytes(32, "big").hex(),
        "address": "0x" + keypair.address.hex(),
    }
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_keyfile(path: str | Path) -> KeyPair:
    with open(path) as fh:
        payload = json.load(fh)
    keypair = KeyPair.from_secret(int(payload["secret"], 16))
    stored = payload.get("address", "")
    if stored and stored.lower() != "0x" + keypair.address.hex():
        raise ValueError(f"key file {path}: stored address does not match secret")
    return keypair
