"""Naive reference model of the contract, independent of aidchain.ledger.

Operations arrive as plain tuples, events come out as plain tuples, and
the canonical state bytes are assembled with struct directly from the
documented layout. Bank-account hashing goes through the independent
keccak oracle so no code path is shared with the implementation under
test.
"""

import struct

from reference_keccak import keccak256_oracle

LIMIT = 2**128 - 1


class NaiveAidModel:
    def __init__(self, organization: bytes):
        self.org = organization
        self.recipients: dict[bytes, bool] = {}
        self.balances: dict[bytes, int] = {organization: 0}
        self.accounts: dict[bytes, bytes] = {}
        self.events: list[tuple] = []

    def step(self, op: tuple) -> tuple | None:
        """Apply one op tuple; returns the error name or None on success."""
        kind, sender = op[0], op[1]
        if sender != self.org:
            return ("error", "UNAUTHORIZED")
        if kind == "add_recipient":
            self.recipients[op[2]] = True
            self.events.append(("RecipientAdded", op[2]))
            return None
        if kind == "remove_recipient":
            self.recipients[op[2]] = False
            self.events.append(("RecipientRemoved", op[2]))
            return None
        if kind == "register_bank_account":
            recipient, account = op[2], op[3]
            if not self.recipients.get(recipient):
                return ("error", "NOT_RECIPIENT")
            if account == b"":
                return ("error", "EMPTY_ACCOUNT")
            digest = keccak256_oracle(account)
            self.accounts[recipient] = digest
            self.events.append(("BankAccountRegistered", recipient, digest))
            return None
        if kind == "add_funds":
            amount = op[2]
            if self.balances[self.org] + amount > LIMIT:
                return ("error", "OVERFLOW")
            self.balances[self.org] += amount
            self.events.append(("FundsAdded", amount))
            return None
        if kind == "send_allowance":
            recipient, amount = op[2], op[3]
            if not self.recipients.get(recipient):
                return ("error", "NOT_RECIPIENT")
            if self.balances[self.org] < amount:
                return ("error", "INSUFFICIENT_FUNDS")
            self.balances[self.org] -= amount
            self.events.append(("AllowanceSent", recipient, amount))
            return None
        raise ValueError(kind)

    def serialize(self) -> bytes:
        out = [self.org]
        out.append(struct.pack(">I", len(self.recipients)))
        for addr in sorted(self.recipients):
            out.append(addr + (b"\x01" if self.recipients[addr] else b"\x00"))
        out.append(struct.pack(">I", len(self.balances)))
        for addr in sorted(self.balances):
            out.append(addr + self.balances[addr].to_bytes(16, "big"))
        out.append(struct.pack(">I", len(self.accounts)))
        for addr in sorted(self.accounts):
            out.append(addr + self.accounts[addr])
        return b"".join(out)
