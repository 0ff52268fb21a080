"""Block persistence and replay.

The block log is a flat file of length-prefixed frames, each carrying a
CRC32 of its payload; a corrupt or truncated frame makes the node
refuse to serve (fail-stop) rather than answer from questionable state.
The materialized state is rebuilt by full replay on every startup and
must equal what incremental commits produced, byte for byte.
"""

from __future__ import annotations

import os
import struct
import threading
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .. import ledger
from ..consensus import (
    Block,
    ExecutionResult,
    execute_transactions,
    header_hash,
    validate_block,
    verify_seals,
)
from ..ledger import AidState, Event, Receipt
from .banksink import BankInstruction, BankSink
from .genesis import GenesisDoc
from .tx import tx_hash

_FRAME_HEADER = struct.Struct(">II")  # payload length, crc32


class StorageError(RuntimeError):
    """Corrupt or unreadable block log; the node must not serve."""


class ValidationError(RuntimeError):
    """Block refused at commit time."""


class GapInChainError(ValidationError):
    pass


class HashMismatchError(ValidationError):
    pass


def append_frame(fh, payload: bytes) -> None:
    fh.write(_FRAME_HEADER.pack(len(payload), zlib.crc32(payload)))
    fh.write(payload)
    fh.flush()
    os.fsync(fh.fileno())


def read_frames(path: Path) -> list[bytes]:
    frames = []
    data = path.read_bytes()
    offset = 0
    while offset < len(data):
        if offset + _FRAME_HEADER.size > len(data):
            raise StorageError(f"{path}: truncated frame header at byte {offset}")
        length, crc = _FRAME_HEADER.unpack_from(data, offset)
        offset += _FRAME_HEADER.size
        if offset + length > len(data):
            raise StorageError(f"{path}: truncated frame payload at byte {offset}")
        payload = data[offset:offset + length]
        if zlib.crc32(payload) != crc:
            raise StorageError(f"{path}: checksum mismatch at byte {offset}")
        frames.append(payload)
        offset += length
    return frames


@dataclass(frozen=True)
class EventRecord:
    height: int
    tx_index: int
    tx_hash: bytes
    event_index: int
    event: Event

    @property
    def name(self) -> str:
        return ledger.EVENT_NAMES[type(self.event)]


@dataclass
class ReplayResult:
    state: AidState
    nonces: dict[bytes, int]
    events: list[EventRecord] = field(default_factory=list)
    receipts: dict[bytes, tuple[int, Receipt]] = field(default_factory=dict)
    instructions: list[BankInstruction] = field(default_factory=list)


def _harvest(height: int, block: Block, result: ExecutionResult, into: ReplayResult) -> None:
    for tx_index, (tx, receipt) in enumerate(zip(block.transactions, result.receipts)):
        digest = tx_hash(tx)
        into.receipts[digest] = (height, receipt)
        for event_index, event in enumerate(receipt.events):
            into.events.append(EventRecord(height, tx_index, digest, event_index, event))
    for draft in result.instructions:
        into.instructions.append(BankInstruction(
            recipient=draft.recipient,
            account_hash=draft.account_hash,
            amount=draft.amount,
            block_height=height,
            tx_hash=tx_hash(block.transactions[draft.tx_index]),
            event_index=draft.event_index,
        ))


def replay(genesis: GenesisDoc, blocks: Iterable[Block]) -> ReplayResult:
    """Recompute everything from the ordered block sequence.

    Total over failed transactions (they are traversed, contribute no
    events) but strict about chain structure: a height gap raises
    GapInChainError, a broken parent link or state root mismatch raises
    HashMismatchError.
    """
    result = ReplayResult(state=genesis.initial_state(), nonces={})
    parent = genesis.block().header
    for block in blocks:
        if block.header.height != parent.height + 1:
            raise GapInChainError(
                f"expected height {parent.height + 1}, got {block.header.height}"
            )
        if block.header.parent_hash != header_hash(parent):
            raise HashMismatchError(f"parent hash broken at height {block.header.height}")
        executed = execute_transactions(result.state, result.nonces, block.transactions)
        if ledger.state_root(executed.state) != block.header.state_root:
            raise HashMismatchError(f"state root mismatch at height {block.header.height}")
        _harvest(block.header.height, block, executed, result)
        result.state = executed.state
        result.nonces = executed.nonces
        parent = block.header
    return result


@dataclass(frozen=True)
class Snapshot:
    """Consistent read view; index lengths bound the append-only lists."""

    head_height: int
    head_hash: bytes
    state: AidState
    events_len: int
    blocks_len: int


class ChainStore:
    """Append-only chain with materialized state and event indexes."""

    def __init__(self, genesis: GenesisDoc, data_dir: str | Path,
                 sink: BankSink | None = None) -> None:
        self.genesis = genesis
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.data_dir / "blocks.log"
        self.sink = sink
        self._lock = threading.Lock()
        self.blocks: list[Block] = [genesis.block()]
        if self.log_path.exists():
            for payload in read_frames(self.log_path):
                self.blocks.append(Block.decode(payload))
        replayed = replay(genesis, self.blocks[1:])
        self.state = replayed.state
        self.nonces = replayed.nonces
        self.events = replayed.events
        self.receipts = replayed.receipts
        head = self.blocks[-1].header
        if ledger.state_root(self.state) != head.state_root:
            raise StorageError("replayed state does not match head state root")
        if self.sink is not None:
            self.sink.reconcile(replayed.instructions)
        self._log_fh = open(self.log_path, "ab")
        self._snapshot = Snapshot(
            head.height, header_hash(head), self.state, len(self.events), len(self.blocks)
        )

    # -- write path ---------------------------------------------------------------

    def commit_block(self, block: Block, precomputed: ExecutionResult | None = None,
                     check_seals: bool = True) -> list[Receipt]:
        """Durably append a finalized block and apply it.

        The block must extend the head and carry a seal quorum. The
        frame hits disk before any in-memory structure changes; storage
        failures are raised (fail-stop), validation failures refuse the
        block and leave the store untouched.
        """
        with self._lock:
            parent = self.blocks[-1].header
            if check_seals:
                ok, reason = verify_seals(block, self.genesis.validator_set())
                if not ok:
                    raise ValidationError(f"seal check failed: {reason}")
            if precomputed is None:
                ok, reason, result = validate_block(
                    block, parent, self.state, self.nonces, self.genesis.validator_set()
                )
                if not ok:
                    raise ValidationError(reason)
            else:
                if block.header.height != parent.height + 1:
                    raise ValidationError("height not contiguous with head")
                if block.header.parent_hash != header_hash(parent):
                    raise ValidationError("parent hash mismatch at commit")
                result = precomputed
            try:
                append_frame(self._log_fh, block.encode())
            except OSError as exc:  # fail-stop
                raise StorageError(f"block log append failed: {exc}") from exc
            height = block.header.height
            harvest = ReplayResult(state=result.state, nonces=result.nonces)
            _harvest(height, block, result, harvest)
            self.blocks.append(block)
            self.state = result.state
            self.nonces = result.nonces
            self.events.extend(harvest.events)
            self.receipts.update(harvest.receipts)
            self._snapshot = Snapshot(
                height, block.hash, self.state, len(self.events), len(self.blocks)
            )
            if self.sink is not None:
                for instruction in harvest.instructions:
                    self.sink.emit(instruction)
            return result.receipts

    def close(self) -> None:
        with self._lock:
            self._log_fh.close()
            if self.sink is not None:
                self.sink.close()

    # -- read path ------------------------------------------------------------------

    def snapshot(self) -> Snapshot:
        return self._snapshot

    def head(self) -> tuple[int, bytes]:
        snap = self._snapshot
        return snap.head_height, snap.head_hash

    def block_at(self, height: int) -> Block | None:
        snap = self._snapshot
        if 0 <= height < snap.blocks_len:
            return self.blocks[height]
        return None

    def events_at(self, snap: Snapshot) -> list[EventRecord]:
        return self.events[:snap.events_len]

    def disbursed_total(self, recipient: bytes) -> int:
        snap = self._snapshot
        return sum(
            record.event.amount
            for record in self.events_at(snap)
            if record.name == "AllowanceSent" and record.event.recipient == recipient
        )
