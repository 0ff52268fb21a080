"""Operator command line: keys, network bootstrap, transactions, queries.

Exit codes: 0 success, 1 usage error, 2 node unreachable, 3 application
error (rejected admission, failure receipt, not found).
"""

from __future__ import annotations

import json
import socket
import sys
import time
from pathlib import Path

import click
import requests

from .crypto import KeyPair, read_keyfile, write_keyfile
from .ledger import (
    AddFunds,
    AddRecipient,
    RegisterBankAccount,
    RemoveRecipient,
    SendAllowance,
    format_address,
    parse_address,
)
from .node.config import NodeConfig
from .node.genesis import GenesisDoc
from .node.tx import build_tx, tx_hash


class ConnectionFailed(RuntimeError):
    pass


class AppFailure(RuntimeError):
    pass


class NodeClient:
    def __init__(self, base_url: str) -> None:
        self.base_url = base_url.rstrip("/")

    def _request(self, method: str, path: str, **kwargs):
        try:
            response = requests.request(method, self.base_url + path, timeout=10, **kwargs)
        except requests.RequestException as exc:
            raise ConnectionFailed(f"cannot reach node at {self.base_url}: {exc}") from exc
        if response.status_code == 404:
            raise AppFailure(f"not found: {path}")
        if response.status_code >= 400:
            raise AppFailure(f"{path}: {response.status_code} {response.text}")
        return response.json()

    def get(self, path: str):
        return self._request("GET", path)

    def post(self, path: str, payload: dict):
        return self._request("POST", path, json=payload)

    def submit_and_wait(self, tx, wait: bool, timeout_s: float = 30.0) -> dict:
        encoded = tx.encode().hex()
        result = self.post("/tx", {"tx": encoded})
        if result.get("status") != "accepted":
            raise AppFailure(f"transaction rejected: {result.get('reason')}")
        if not wait:
            return result
        digest = "0x" + tx_hash(tx).hex()
        deadline = time.monotonic() + timeout_s
        while time.monotonic() < deadline:
            status = self.get(f"/tx/{digest}")
            if status.get("status") == "committed":
                receipt = status["receipt"]
                result = {"hash": digest, "status": "committed",
                          "height": status["height"], "receipt": receipt}
                if receipt.get("status") != "success":
                    raise AppFailure(
                        f"transaction {digest} failed: {receipt.get('error')}"
                    )
                return result
            time.sleep(0.05)
        raise AppFailure(f"transaction {digest} not finalized within {timeout_s}s")


def _echo(payload: dict, as_json: bool) -> None:
    if as_json:
        click.echo(json.dumps(payload, indent=2))
    else:
        for key, value in payload.items():
            click.echo(f"{key}: {value}")


node_url_option = click.option(
    "--node-url", default="http://127.0.0.1:9080", show_default=True,
    help="Base URL of the node to talk to.")
json_option = click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")


@click.group()
def cli() -> None:
    """Consortium ledger operator tooling."""


# -- keys ------------------------------------------------------------------------


@cli.group()
def keys() -> None:
    """Key management."""


@keys.command("gen")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", default=None, help="Hex seed for a deterministic key (tests only).")
def keys_gen(out_path: str, seed: str | None) -> None:
    """Generate a key file and print the derived address."""
    keypair = (KeyPair.from_seed(bytes.fromhex(seed)) if seed else KeyPair.generate())
    write_keyfile(out_path, keypair)
    click.echo(format_address(keypair.address))


# -- network ---------------------------------------------------------------------


@cli.group()
def network() -> None:
    """Bootstrap and run consortium networks."""


def _free_ports(count: int) -> list[int]:
    sockets, ports = [], []
    for _ in range(count):
        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        sockets.append(sock)
        ports.append(sock.getsockname()[1])
    for sock in sockets:
        sock.close()
    return ports


def network_init_impl(
    n_validators: int,
    organization_key: Path,
    out_dir: Path,
    *,
    seed: bytes | None = None,
    chain_id: str = "aidchain-local",
    strict: bool = False,
    base_port: int | None = None,
    produce_empty_blocks: bool = False,
) -> tuple[GenesisDoc, list[Path]]:
    if n_validators < 4:
        raise click.BadParameter(
            f"need at least 4 validators for f >= 1, got {n_validators}",
            param_hint="--validators",
        )
    org = read_keyfile(organization_key)
    out_dir.mkdir(parents=True, exist_ok=True)
    if seed is not None:
        keypairs = [KeyPair.from_seed(seed + b":validator:" + bytes([i]))
                    for i in range(n_validators)]
        timestamp = 1_700_000_000
    else:
        keypairs = [KeyPair.generate() for _ in range(n_validators)]
        timestamp = int(time.time())
    keypairs.sort(key=lambda kp: kp.address)
    genesis = GenesisDoc(
        chain_id=chain_id,
        organization=org.address,
        validators=tuple(kp.address for kp in keypairs),
        strict_bank_account_mode=strict,
        timestamp=timestamp,
    )
    genesis_path = out_dir / "genesis.json"
    genesis.save(genesis_path)
    ports = (_free_ports(n_validators) if base_port is None
             else [base_port + i for i in range(n_validators)])
    peers = {
        format_address(kp.address): f"http://127.0.0.1:{port}"
        for kp, port in zip(keypairs, ports)
    }
    config_paths = []
    for index, (keypair, port) in enumerate(zip(keypairs, ports)):
        node_dir = out_dir / f"node-{index}"
        node_dir.mkdir(parents=True, exist_ok=True)
        write_keyfile(node_dir / "node.key", keypair)
        config = NodeConfig(
            listen=f"127.0.0.1:{port}",
            data_dir=str(node_dir / "data"),
            genesis_path=str(genesis_path),
            key_path=str(node_dir / "node.key"),
            strict_bank_account_mode=None,
            bank_sink="bank_instructions.jsonl",
            peers=peers,
            produce_empty_blocks=produce_empty_blocks,
        )
        config_path = node_dir / "config.json"
        config.save(config_path)
        config_paths.append(config_path)
    return genesis, config_paths


@network.command("init")
@click.option("--validators", "n_validators", default=4, show_default=True, type=int)
@click.option("--organization-key", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=None, help="Hex seed for deterministic bootstrap.")
@click.option("--chain-id", default="aidchain-local", show_default=True)
@click.option("--strict", is_flag=True,
              help="Require a registered bank account before admitting allowances.")
@click.option("--base-port", default=None, type=int,
              help="First listen port; defaults to free ephemeral ports.")
def network_init(n_validators, organization_key, out_dir, seed, chain_id, strict, base_port):
    """Write a genesis document and one config per validator node."""
    genesis, config_paths = network_init_impl(
        n_validators,
        Path(organization_key),
        Path(out_dir),
        seed=bytes.fromhex(seed) if seed else None,
        chain_id=chain_id,
        strict=strict,
        base_port=base_port,
    )
    vset = genesis.validator_set()
    click.echo(f"genesis: {Path(out_dir) / 'genesis.json'}")
    click.echo(f"validators: {vset.n} (f={vset.f}, quorum={vset.quorum})")
    for path in config_paths:
        click.echo(f"node config: {path}")


@network.command("run")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
def network_run(config_path: str) -> None:
    """Run one validator node until interrupted."""
    from .node.service import NodeRuntime

    runtime = NodeRuntime(NodeConfig.load(config_path))
    runtime.start()
    click.echo(f"node {format_address(runtime.keypair.address)} serving on {runtime.base_url}")
    try:
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    finally:
        runtime.stop()


def _wait_ready(clients: list[NodeClient], timeout_s: float = 10.0) -> None:
    deadline = time.monotonic() + timeout_s
    for client in clients:
        while True:
            try:
                client.get("/head")
                break
            except ConnectionFailed:
                if time.monotonic() > deadline:
                    raise
                time.sleep(0.05)


@network.command("demo")
@click.option("--out-dir", default=None, type=click.Path(file_okay=False),
              help="Working directory; a temp dir by default.")
@click.option("--seed", default=42, show_default=True, type=int,
              help="Deterministic key seed; repeated runs agree byte for byte.")
@click.option("--variant", type=click.Choice(["standard", "strict-rejection"]),
              default="standard", show_default=True)
def network_demo(out_dir, seed, variant) -> None:
    """Boot a 4-validator local network and run the canonical scenario.

    Funds the organization with 1000, enrolls a recipient, registers a
    bank account, disburses 300, then checks balances, the event
    sequence, the audit total and the bank-instruction file.
    """
    import tempfile

    from .node.service import NodeRuntime

    work_dir = Path(out_dir) if out_dir else Path(tempfile.mkdtemp(prefix="aidchain-demo-"))
    work_dir.mkdir(parents=True, exist_ok=True)
    seed_bytes = b"demo:%d" % seed
    org_key_path = work_dir / "org.key"
    write_keyfile(org_key_path, KeyPair.from_seed(seed_bytes + b":org"))
    recipient = KeyPair.from_seed(seed_bytes + b":recipient")
    strict = variant == "strict-rejection"
    _, config_paths = network_init_impl(
        4, org_key_path, work_dir, seed=seed_bytes, strict=strict,
        chain_id="aidchain-demo",
    )
    runtimes = [NodeRuntime(NodeConfig.load(path)) for path in config_paths]
    for runtime in runtimes:
        runtime.start()
    try:
        clients = [NodeClient(r.base_url) for r in runtimes]
        _wait_ready(clients)
        client = clients[0]
        org = read_keyfile(org_key_path)
        recipient_hex = format_address(recipient.address)

        def send(payload, expect_reject=None):
            nonce = client.get(f"/nonce/{format_address(org.address)}")["next_nonce"]
            tx = build_tx(org, nonce, payload)
            if expect_reject is None:
                return client.submit_and_wait(tx, wait=True)
            result = client.post("/tx", {"tx": tx.encode().hex()})
            if result.get("status") != "rejected" or result.get("reason") != expect_reject:
                raise AppFailure(f"expected rejection {expect_reject}, got {result}")
            click.echo(f"rejected as expected: {expect_reject}")
            return result

        send(AddFunds(1000))
        click.echo("funds added: 1000")
        if strict:
            send(AddRecipient(recipient.address))
            click.echo(f"recipient enrolled: {recipient_hex}")
            send(SendAllowance(recipient.address, 300),
                 expect_reject="strict_mode_no_account")
            click.echo("strict-rejection scenario complete")
            return
        send(AddRecipient(recipient.address))
        click.echo(f"recipient enrolled: {recipient_hex}")
        send(RegisterBankAccount(recipient.address, b"IBAN-TEST-001"))
        click.echo("bank account registered")
        send(SendAllowance(recipient.address, 300))
        click.echo("allowance sent: 300")

        balance = client.get(f"/balance/{format_address(org.address)}")["balance"]
        if balance != 700:
            raise AppFailure(f"expected organization balance 700, got {balance}")
        recipient_balance = client.get(f"/balance/{recipient_hex}")["balance"]
        if recipient_balance != 0:
            raise AppFailure("recipient must have no on-chain balance")
        status = client.get(f"/recipient/{recipient_hex}")
        if not (status["enrolled"] and status["bank_account_registered"]):
            raise AppFailure(f"unexpected recipient status: {status}")
        events = client.get("/events")["events"]
        sequence = [e["type"] for e in events]
        expected = ["FundsAdded", "RecipientAdded", "BankAccountRegistered", "AllowanceSent"]
        if sequence != expected:
            raise AppFailure(f"event sequence {sequence} != {expected}")
        disbursed = client.get(f"/audit/disbursed/{recipient_hex}")["total_disbursed"]
        if disbursed != 300:
            raise AppFailure(f"expected 300 disbursed, got {disbursed}")
        sink_path = Path(runtimes[0].config.data_dir) / "bank_instructions.jsonl"
        lines = [l for l in sink_path.read_text().splitlines() if l.strip()]
        if len(lines) != 1:
            raise AppFailure(f"expected exactly 1 bank instruction, got {len(lines)}")
        instruction = json.loads(lines[0])
        if instruction["amount"] != 300 or instruction["recipient"] != recipient_hex:
            raise AppFailure(f"unexpected bank instruction: {instruction}")
        head = client.get("/head")
        click.echo(f"organization balance: {balance}")
        click.echo(f"events: {' -> '.join(sequence)}")
        click.echo(f"bank instructions: {len(lines)}")
        click.echo(f"final state_root: {head['state_root']}")
        click.echo("demo complete")
    finally:
        for runtime in runtimes:
            runtime.stop()


# -- organization transactions ------------------------------------------------------


@cli.group()
def org() -> None:
    """Organization-signed contract operations."""


def _org_submit(node_url: str, key_path: str, payload, wait: bool, as_json: bool) -> None:
    client = NodeClient(node_url)
    keypair = read_keyfile(key_path)
    nonce = client.get(f"/nonce/{format_address(keypair.address)}")["next_nonce"]
    tx = build_tx(keypair, nonce, payload)
    result = client.submit_and_wait(tx, wait=wait)
    _echo(result, as_json)


def _org_options(fn):
    fn = click.option("--key", "key_path", required=True,
                      type=click.Path(exists=True, dir_okay=False),
                      help="Organization key file.")(fn)
    fn = click.option("--wait", is_flag=True, help="Poll until finalized.")(fn)
    fn = node_url_option(fn)
    fn = json_option(fn)
    return fn


@org.command("add-recipient")
@click.argument("recipient")
@_org_options
def org_add_recipient(recipient, key_path, wait, node_url, as_json):
    _org_submit(node_url, key_path, AddRecipient(parse_address(recipient)), wait, as_json)


@org.command("remove-recipient")
@click.argument("recipient")
@_org_options
def org_remove_recipient(recipient, key_path, wait, node_url, as_json):
    _org_submit(node_url, key_path, RemoveRecipient(parse_address(recipient)), wait, as_json)


@org.command("register-account")
@click.argument("recipient")
@click.argument("account")
@_org_options
def org_register_account(recipient, account, key_path, wait, node_url, as_json):
    """Register ACCOUNT for RECIPIENT; only its keccak-256 hash leaves this process."""
    payload = RegisterBankAccount(parse_address(recipient), account.encode())
    _org_submit(node_url, key_path, payload, wait, as_json)


@org.command("add-funds")
@click.argument("amount", type=int)
@_org_options
def org_add_funds(amount, key_path, wait, node_url, as_json):
    _org_submit(node_url, key_path, AddFunds(amount), wait, as_json)


@org.command("send-allowance")
@click.argument("recipient")
@click.argument("amount", type=int)
@_org_options
def org_send_allowance(recipient, amount, key_path, wait, node_url, as_json):
    _org_submit(node_url, key_path, SendAllowance(parse_address(recipient), amount), wait, as_json)


# -- queries -------------------------------------------------------------------------


@cli.group()
def query() -> None:
    """Read-only node queries."""


@query.command("balance")
@click.argument("address")
@node_url_option
@json_option
def query_balance(address, node_url, as_json):
    _echo(NodeClient(node_url).get(f"/balance/{format_address(parse_address(address))}"), as_json)


@query.command("recipient")
@click.argument("address")
@node_url_option
@json_option
def query_recipient(address, node_url, as_json):
    _echo(NodeClient(node_url).get(f"/recipient/{format_address(parse_address(address))}"), as_json)


@query.command("events")
@click.option("--type", "event_type", default=None)
@click.option("--recipient", default=None)
@click.option("--from-height", default=None, type=int)
@click.option("--to-height", default=None, type=int)
@click.option("--limit", default=100, show_default=True, type=int)
@click.option("--offset", default=0, type=int)
@node_url_option
@json_option
def query_events(event_type, recipient, from_height, to_height, limit, offset,
                 node_url, as_json):
    params = {"limit": limit, "offset": offset}
    if event_type:
        params["type"] = event_type
    if recipient:
        params["recipient"] = recipient
    if from_height is not None:
        params["from_height"] = from_height
    if to_height is not None:
        params["to_height"] = to_height
    query_string = "&".join(f"{k}={v}" for k, v in params.items())
    result = NodeClient(node_url).get(f"/events?{query_string}")
    if as_json:
        click.echo(json.dumps(result, indent=2))
        return
    for event in result["events"]:
        line = f"h={event['height']} {event['type']}"
        if "recipient" in event:
            line += f" recipient={event['recipient']}"
        if "amount" in event:
            line += f" amount={event['amount']}"
        click.echo(line)
    click.echo(f"total: {result['total']} (head height {result['head_height']})")


@query.command("audit-export")
@click.option("--out", "out_path", default="audit_export.jsonl", show_default=True,
              type=click.Path(dir_okay=False))
@node_url_option
@json_option
def query_audit_export(out_path, node_url, as_json):
    """Export the full event history with running conservation totals."""
    client = NodeClient(node_url)
    records, offset = [], 0
    while True:
        page = client.get(f"/events?limit=500&offset={offset}")
        records.extend(page["events"])
        offset += len(page["events"])
        if offset >= page["total"] or not page["events"]:
            break
    added = disbursed = 0
    rows = []
    for event in records:
        if event["type"] == "FundsAdded":
            added += event["amount"]
        elif event["type"] == "AllowanceSent":
            disbursed += event["amount"]
        rows.append({**event, "running_added": added, "running_disbursed": disbursed,
                     "running_org_balance": added - disbursed})
    head = client.get("/head")
    org_balance = client.get(f"/balance/{head['organization']}")["balance"]
    summary = {
        "head_height": head["height"],
        "organization": head["organization"],
        "total_added": added,
        "total_disbursed": disbursed,
        "organization_balance": org_balance,
        "conservation_ok": org_balance == added - disbursed,
    }
    with open(out_path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
        fh.write(json.dumps({"summary": summary}) + "\n")
    _echo(summary, as_json)
    click.echo(f"exported {len(rows)} events to {out_path}")
    if not summary["conservation_ok"]:
        raise AppFailure(
            f"conservation violated: balance {org_balance} != "
            f"added {added} - disbursed {disbursed}"
        )


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)
    except ConnectionFailed as exc:
        click.echo(f"connection error: {exc}", err=True)
        sys.exit(2)
    except AppFailure as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
