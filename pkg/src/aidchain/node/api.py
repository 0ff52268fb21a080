"""Read/submit HTTP API plus the validator peer endpoint.

Thin stdlib server: routes parse paths and JSON, the node runtime does
the work. Read endpoints answer from the finalized snapshot only and
every response carries the head height it reflects.
"""

from __future__ import annotations

import json
import re
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from ..ledger import format_address, parse_address

_ADDRESS_ROUTES = {
    "balance": "api_balance",
    "recipient": "api_recipient",
    "nonce": "api_nonce",
}


class ApiHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # keep test output clean
        pass

    @property
    def node(self):
        return self.server.node  # type: ignore[attr-defined]

    def _reply(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _bad_request(self, message: str) -> None:
        self._reply(400, {"error": "bad_request", "detail": message})

    def do_GET(self) -> None:
        parsed = urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        try:
            if parts == ["head"]:
                return self._reply(200, self.node.api_head())
            if parts == ["mempool"]:
                return self._reply(200, self.node.api_mempool())
            if parts == ["events"]:
                query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
                return self._reply(200, self.node.api_events(query))
            if len(parts) == 2 and parts[0] in _ADDRESS_ROUTES:
                address = parse_address(parts[1])
                return self._reply(200, getattr(self.node, _ADDRESS_ROUTES[parts[0]])(address))
            if len(parts) == 3 and parts[0] == "audit" and parts[1] == "disbursed":
                address = parse_address(parts[2])
                return self._reply(200, self.node.api_disbursed(address))
            if len(parts) == 2 and parts[0] == "block":
                if not re.fullmatch(r"\d+", parts[1]):
                    return self._bad_request("block height must be an integer")
                payload = self.node.api_block(int(parts[1]))
                if payload is None:
                    return self._reply(404, {"error": "not_found"})
                return self._reply(200, payload)
            if len(parts) == 2 and parts[0] == "tx":
                digest = bytes.fromhex(parts[1][2:] if parts[1].startswith("0x") else parts[1])
                return self._reply(200, self.node.api_tx_status(digest))
            return self._reply(404, {"error": "not_found"})
        except ValueError as exc:
            return self._bad_request(str(exc))

    def do_POST(self) -> None:
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            payload = json.loads(raw) if raw else {}
        except json.JSONDecodeError:
            return self._bad_request("body must be JSON")
        parts = [p for p in self.path.split("/") if p]
        try:
            if parts == ["tx"]:
                tx_hex = payload.get("tx", "")
                forwarded = bool(payload.get("forwarded", False))
                return self._reply(200, self.node.api_submit_tx(tx_hex, forwarded))
            if parts == ["consensus"]:
                message_hex = payload.get("message", "")
                return self._reply(200, self.node.api_consensus_message(message_hex))
            return self._reply(404, {"error": "not_found"})
        except ValueError as exc:
            return self._bad_request(str(exc))


def make_server(node, host: str, port: int) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), ApiHandler)
    server.daemon_threads = True
    server.node = node  # type: ignore[attr-defined]
    return server


def event_record_json(record) -> dict:
    event = record.event
    payload: dict = {
        "height": record.height,
        "tx_hash": "0x" + record.tx_hash.hex(),
        "tx_index": record.tx_index,
        "event_index": record.event_index,
        "type": record.name,
    }
    recipient = getattr(event, "recipient", None)
    if recipient is not None:
        payload["recipient"] = format_address(recipient)
    amount = getattr(event, "amount", None)
    if amount is not None:
        payload["amount"] = amount
    account_hash = getattr(event, "account_hash", None)
    if account_hash is not None:
        payload["account_hash"] = "0x" + account_hash.hex()
    return payload
