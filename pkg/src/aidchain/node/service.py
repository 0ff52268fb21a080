"""Full node runtime: consensus engine, persistence, API, peer transport.

The engine runs on a single thread fed by one queue (messages, pokes,
timer expiries), per the engine's event-loop contract. HTTP handler
threads never touch the engine directly: they admit transactions under
a lock and enqueue events. Outbound consensus traffic goes through one
sender thread per peer so a slow peer cannot stall the engine.
"""

from __future__ import annotations

import heapq
import json
import queue
import threading
import time
from pathlib import Path

import requests

from ..consensus import Engine, EngineConfig, decode_message, encode_message
from ..crypto import read_keyfile
from ..ledger import (
    AddFunds,
    AddRecipient,
    RegisterBankAccount,
    RemoveRecipient,
    SendAllowance,
    TxError,
    format_address,
)
from .api import event_record_json, make_server
from .banksink import open_sink
from .config import NodeConfig
from .genesis import GenesisDoc
from .mempool import Mempool
from .store import ChainStore
from .tx import Transaction, tx_hash


def _now_ms() -> int:
    return int(time.time() * 1000)


def payload_json(payload) -> dict:
    if isinstance(payload, AddRecipient):
        return {"type": "AddRecipient", "recipient": format_address(payload.recipient)}
    if isinstance(payload, RemoveRecipient):
        return {"type": "RemoveRecipient", "recipient": format_address(payload.recipient)}
    if isinstance(payload, RegisterBankAccount):
        return {"type": "RegisterBankAccount",
                "recipient": format_address(payload.recipient),
                "account_len": len(payload.account)}
    if isinstance(payload, AddFunds):
        return {"type": "AddFunds", "amount": payload.amount}
    return {"type": "SendAllowance",
            "recipient": format_address(payload.recipient),
            "amount": payload.amount}


def receipt_json(receipt) -> dict:
    payload = {"status": "success" if receipt.ok else "failure"}
    if receipt.error is not None:
        payload["error"] = TxError(receipt.error).name.lower()
        payload["error_code"] = int(receipt.error)
    payload["events"] = [
        {"type": type(e).__name__, **{
            k: (format_address(v) if k == "recipient" else
                "0x" + v.hex() if isinstance(v, bytes) else v)
            for k, v in e.__dict__.items()
        }}
        for e in receipt.events
    ]
    return payload


class _LockedTxSource:
    """Engine-facing mempool view serialized with HTTP admissions."""

    def __init__(self, mempool: Mempool, lock: threading.Lock) -> None:
        self._mempool = mempool
        self._lock = lock

    def candidates(self):
        with self._lock:
            return self._mempool.candidates()

    def remove_committed(self, transactions):
        with self._lock:
            self._mempool.remove_committed(transactions)


class _PeerSender:
    def __init__(self, base_url: str) -> None:
        self.base_url = base_url.rstrip("/")
        self._queue: "queue.Queue[tuple[str, dict] | None]" = queue.Queue(maxsize=1000)
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def post(self, path: str, payload: dict) -> None:
        try:
            self._queue.put_nowait((path, payload))
        except queue.Full:
            pass  # consensus tolerates loss; round changes recover

    def _run(self) -> None:
        session = requests.Session()
        while True:
            item = self._queue.get()
            if item is None:
                return
            path, payload = item
            try:
                session.post(self.base_url + path, json=payload, timeout=3)
            except requests.RequestException:
                pass

    def stop(self) -> None:
        self._queue.put(None)
        self._thread.join(timeout=2)


class NodeRuntime:
    def __init__(self, config: NodeConfig) -> None:
        self.config = config
        self.genesis = GenesisDoc.load(config.genesis_path)
        self.keypair = read_keyfile(config.key_path)
        vset = self.genesis.validator_set()
        if self.keypair.address not in vset:
            raise ValueError("node key is not in the genesis validator set")
        strict = config.strict_bank_account_mode
        if strict is None:
            strict = self.genesis.strict_bank_account_mode
        self.strict_mode = bool(strict)
        data_dir = Path(config.data_dir)
        self.sink = open_sink(config.bank_sink, data_dir)
        self.store = ChainStore(self.genesis, data_dir, sink=self.sink)
        self.mempool = Mempool(strict_bank_account_mode=self.strict_mode)
        self._admission_lock = threading.Lock()
        head_block = self.store.blocks[-1]
        self.engine = Engine(
            self.keypair,
            vset,
            head_block,
            self.store.state,
            mempool=_LockedTxSource(self.mempool, self._admission_lock),
            config=EngineConfig(produce_empty_blocks=config.produce_empty_blocks),
        )
        self.engine.parent_nonces = dict(self.store.nonces)
        self._peers = {
            addr: _PeerSender(url)
            for addr, url in config.peers.items()
            if addr.lower() != format_address(self.keypair.address)
        }
        self._events: "queue.Queue[tuple]" = queue.Queue()
        self._timers: list[tuple[int, int]] = []  # (deadline ms, engine timer seq)
        self._stop = threading.Event()
        self._engine_thread = threading.Thread(target=self._engine_loop, daemon=True)
        self._server = make_server(self, config.host, config.port)
        self._server_thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    # -- lifecycle -----------------------------------------------------------------

    def start(self) -> None:
        self._server_thread.start()
        self._engine_thread.start()

    def stop(self) -> None:
        self._stop.set()
        self._events.put(("stop",))
        self._server.shutdown()
        self._server.server_close()
        self._engine_thread.join(timeout=5)
        for sender in self._peers.values():
            sender.stop()
        self.store.close()

    @property
    def base_url(self) -> str:
        return f"http://{self.config.host}:{self.config.port}"

    # -- engine thread ----------------------------------------------------------------

    def _engine_loop(self) -> None:
        self._dispatch(self.engine.start(_now_ms()))
        while not self._stop.is_set():
            timeout = None
            if self._timers:
                timeout = max(0.0, (self._timers[0][0] - _now_ms()) / 1000.0)
            try:
                event = self._events.get(timeout=timeout)
            except queue.Empty:
                event = None
            now = _now_ms()
            if event is not None:
                kind = event[0]
                if kind == "stop":
                    return
                if kind == "msg":
                    self._dispatch(self.engine.on_message(now, event[1]))
                elif kind == "poke":
                    self._dispatch(self.engine.poke(now))
            while self._timers and self._timers[0][0] <= now:
                _, seq = heapq.heappop(self._timers)
                self._dispatch(self.engine.on_timeout(_now_ms(), seq))

    def _dispatch(self, actions) -> None:
        for action in actions:
            if action[0] == "broadcast":
                payload = {"message": encode_message(action[1]).hex()}
                for sender in self._peers.values():
                    sender.post("/consensus", payload)
            elif action[0] == "timer":
                heapq.heappush(self._timers, (_now_ms() + action[2], action[1]))
            elif action[0] == "finalized":
                block, result = action[1], action[2]
                self.store.commit_block(block, precomputed=result)

    # -- API methods (called from HTTP handler threads) -----------------------------------

    def api_head(self) -> dict:
        height, block_hash = self.store.head()
        snap = self.store.snapshot()
        return {
            "height": height,
            "block_hash": "0x" + block_hash.hex(),
            "state_root": "0x" + self.store.blocks[snap.blocks_len - 1].header.state_root.hex(),
            "chain_id": self.genesis.chain_id,
            "organization": format_address(self.genesis.organization),
        }

    def api_balance(self, address: bytes) -> dict:
        snap = self.store.snapshot()
        return {
            "address": format_address(address),
            "balance": snap.state.balances.get(address, 0),
            "head_height": snap.head_height,
        }

    def api_recipient(self, address: bytes) -> dict:
        snap = self.store.snapshot()
        account_hash = snap.state.bank_accounts.get(address)
        return {
            "address": format_address(address),
            "enrolled": snap.state.recipients.get(address, False),
            "bank_account_registered": account_hash is not None,
            "account_hash": "0x" + account_hash.hex() if account_hash else None,
            "head_height": snap.head_height,
        }

    def api_nonce(self, address: bytes) -> dict:
        with self._admission_lock:
            next_nonce = self.mempool.next_nonce(address, self.store.nonces)
        return {"address": format_address(address), "next_nonce": next_nonce}

    def api_events(self, query: dict) -> dict:
        snap = self.store.snapshot()
        records = self.store.events_at(snap)
        type_filter = query.get("type")
        recipient = query.get("recipient")
        recipient_raw = None
        if recipient:
            from ..ledger import parse_address

            recipient_raw = parse_address(recipient)
        from_height = int(query["from_height"]) if "from_height" in query else None
        to_height = int(query["to_height"]) if "to_height" in query else None
        limit = min(int(query.get("limit", 100)), 1000)
        offset = int(query.get("offset", 0))
        matched = []
        for record in records:
            if type_filter and record.name != type_filter:
                continue
            if recipient_raw is not None and getattr(record.event, "recipient", None) != recipient_raw:
                continue
            if from_height is not None and record.height < from_height:
                continue
            if to_height is not None and record.height > to_height:
                continue
            matched.append(record)
        page = matched[offset:offset + limit]
        return {
            "events": [event_record_json(r) for r in page],
            "total": len(matched),
            "offset": offset,
            "head_height": snap.head_height,
        }

    def api_disbursed(self, address: bytes) -> dict:
        snap = self.store.snapshot()
        return {
            "address": format_address(address),
            "total_disbursed": self.store.disbursed_total(address),
            "head_height": snap.head_height,
        }

    def api_block(self, height: int) -> dict | None:
        block = self.store.block_at(height)
        if block is None:
            return None
        txs = []
        for tx in block.transactions:
            digest = tx_hash(tx)
            entry = {
                "hash": "0x" + digest.hex(),
                "sender": format_address(tx.sender),
                "nonce": tx.nonce,
                "payload": payload_json(tx.payload),
            }
            committed = self.store.receipts.get(digest)
            if committed is not None:
                entry["receipt"] = receipt_json(committed[1])
            txs.append(entry)
        header = block.header
        return {
            "height": header.height,
            "hash": "0x" + block.hash.hex(),
            "parent_hash": "0x" + header.parent_hash.hex(),
            "tx_root": "0x" + header.tx_root.hex(),
            "state_root": "0x" + header.state_root.hex(),
            "proposer": format_address(header.proposer),
            "round": header.round,
            "timestamp": header.timestamp,
            "seals": [format_address(v) for v, _ in block.commit_seals],
            "transactions": txs,
        }

    def api_mempool(self) -> dict:
        with self._admission_lock:
            hashes = self.mempool.snapshot_hashes()
        return {"transactions": ["0x" + h.hex() for h in hashes], "count": len(hashes)}

    def api_tx_status(self, digest: bytes) -> dict:
        committed = self.store.receipts.get(digest)
        if committed is not None:
            height, receipt = committed
            return {"status": "committed", "height": height, "receipt": receipt_json(receipt)}
        with self._admission_lock:
            if self.mempool.contains(digest):
                return {"status": "pending"}
        return {"status": "unknown"}

    def api_submit_tx(self, tx_hex: str, forwarded: bool) -> dict:
        try:
            tx = Transaction.decode(bytes.fromhex(tx_hex))
        except Exception:
            return {"status": "rejected", "reason": "malformed"}
        digest = tx_hash(tx)
        with self._admission_lock:
            accepted, reason = self.mempool.admit(tx, self.store.state, self.store.nonces)
        if not accepted:
            return {"hash": "0x" + digest.hex(), "status": "rejected", "reason": reason}
        self._events.put(("poke",))
        if not forwarded:
            payload = {"tx": tx_hex, "forwarded": True}
            for sender in self._peers.values():
                sender.post("/tx", payload)
        return {"hash": "0x" + digest.hex(), "status": "accepted"}

    def api_consensus_message(self, message_hex: str) -> dict:
        try:
            message = decode_message(bytes.fromhex(message_hex))
        except Exception:
            return {"ok": False, "error": "malformed"}
        self._events.put(("msg", message))
        return {"ok": True}
