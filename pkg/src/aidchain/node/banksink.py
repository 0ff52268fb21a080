"""Off-chain bank-transfer instruction sink.

Every finalized AllowanceSent event produces exactly one instruction
record, deduplicated by (block height, tx hash, event index) so node
restarts never double-issue. The default sink is an append-only JSONL
file; a webhook sink posts the same records and keeps a local sidecar
ledger for the dedup key set.
"""

from __future__ import annotations

import json
import os
import queue
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

from ..ledger import format_address, parse_address


@dataclass(frozen=True)
class BankInstruction:
    recipient: bytes
    account_hash: bytes | None  # absent if never registered: manual handling
    amount: int
    block_height: int
    tx_hash: bytes
    event_index: int

    @property
    def key(self) -> tuple[int, bytes, int]:
        return (self.block_height, self.tx_hash, self.event_index)

    def to_json(self) -> dict:
        return {
            "recipient": format_address(self.recipient),
            "account_hash": "0x" + self.account_hash.hex() if self.account_hash else None,
            "amount": self.amount,
            "block_height": self.block_height,
            "tx_hash": "0x" + self.tx_hash.hex(),
            "event_index": self.event_index,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "BankInstruction":
        account_hash = payload.get("account_hash")
        return cls(
            recipient=parse_address(payload["recipient"]),
            account_hash=bytes.fromhex(account_hash[2:]) if account_hash else None,
            amount=int(payload["amount"]),
            block_height=int(payload["block_height"]),
            tx_hash=bytes.fromhex(payload["tx_hash"][2:]),
            event_index=int(payload["event_index"]),
        )


class BankSink(Protocol):
    def emit(self, instruction: BankInstruction) -> bool: ...
    def reconcile(self, instructions: Iterable[BankInstruction]) -> int: ...
    def close(self) -> None: ...


class FileBankSink:
    """Append-only JSONL file, one instruction per line."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._seen: set[tuple[int, bytes, int]] = set()
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                if line.strip():
                    self._seen.add(BankInstruction.from_json(json.loads(line)).key)
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def emit(self, instruction: BankInstruction) -> bool:
        if instruction.key in self._seen:
            return False
        with open(self.path, "a") as fh:
            fh.write(json.dumps(instruction.to_json()) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._seen.add(instruction.key)
        return True

    def reconcile(self, instructions: Iterable[BankInstruction]) -> int:
        """Emit whatever the chain has that the sink is missing."""
        emitted = 0
        for instruction in instructions:
            if self.emit(instruction):
                emitted += 1
        return emitted

    def load(self) -> list[BankInstruction]:
        if not self.path.exists():
            return []
        return [
            BankInstruction.from_json(json.loads(line))
            for line in self.path.read_text().splitlines()
            if line.strip()
        ]

    def close(self) -> None:
        pass


class WebhookBankSink:
    """POSTs instructions to an HTTP endpoint from a background worker.

    Delivery is retried with exponential backoff and never blocks the
    caller; the dedup key set persists in a sidecar JSONL ledger so
    restarts resume where delivery left off.
    """

    def __init__(self, url: str, ledger_path: str | Path,
                 max_backoff_s: float = 5.0) -> None:
        self.url = url
        self._ledger = FileBankSink(ledger_path)
        self._queue: "queue.Queue[BankInstruction | None]" = queue.Queue()
        self._max_backoff_s = max_backoff_s
        self._stop = threading.Event()
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def emit(self, instruction: BankInstruction) -> bool:
        if instruction.key in self._ledger._seen:
            return False
        self._queue.put(instruction)
        return True

    def reconcile(self, instructions: Iterable[BankInstruction]) -> int:
        emitted = 0
        for instruction in instructions:
            if self.emit(instruction):
                emitted += 1
        return emitted

    def _run(self) -> None:
        import requests

        while not self._stop.is_set():
            try:
                instruction = self._queue.get(timeout=0.2)
            except queue.Empty:
                continue
            if instruction is None:
                break
            backoff = 0.2
            while not self._stop.is_set():
                try:
                    response = requests.post(
                        self.url, json=instruction.to_json(), timeout=5
                    )
                    if response.status_code < 500:
                        self._ledger.emit(instruction)
                        break
                except requests.RequestException:
                    pass
                time.sleep(backoff)
                backoff = min(backoff * 2, self._max_backoff_s)

    def close(self) -> None:
        self._stop.set()
        self._queue.put(None)
        self._worker.join(timeout=2)


def open_sink(spec: str, data_dir: Path) -> BankSink:
    """file:<path> | webhook:<url> | bare path; relative paths live in data_dir."""
    if spec.startswith("webhook:"):
        url = spec[len("webhook:"):]
        return WebhookBankSink(url, data_dir / "bank_webhook_ledger.jsonl")
    path = spec[len("file:"):] if spec.startswith("file:") else spec
    resolved = Path(path)
    if not resolved.is_absolute():
        resolved = data_dir / resolved
    return FileBankSink(resolved)
