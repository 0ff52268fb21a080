"""Deterministic transition functions for the aid-distribution contract.

Every operation maps (state, sender, arguments) to (state', receipt)
without touching the input state: guard failures return the input
object itself with a failure receipt, successes return a fresh state.
Only the organization set at genesis may mutate anything; reads are
open to every address.
"""

from __future__ import annotations

from ..codec import Reader, Writer
from ..crypto import keccak256
from .types import (
    AMOUNT_MAX,
    AddFunds,
    AddRecipient,
    AidState,
    AllowanceSent,
    BankAccountRegistered,
    Event,
    FundsAdded,
    Payload,
    Receipt,
    RecipientAdded,
    RecipientRemoved,
    RegisterBankAccount,
    RemoveRecipient,
    SendAllowance,
    TxError,
)


def init(organization: bytes) -> AidState:
    """Genesis state: the deploying address becomes the organization."""
    return AidState(organization=organization, balances={organization: 0})


def _clone(state: AidState) -> AidState:
    return AidState(
        organization=state.organization,
        recipients=dict(state.recipients),
        balances=dict(state.balances),
        bank_accounts=dict(state.bank_accounts),
    )


def add_recipient(state: AidState, sender: bytes, recipient: bytes) -> tuple[AidState, Receipt]:
    if sender != state.organization:
        return state, Receipt.failure(TxError.UNAUTHORIZED)
    new = _clone(state)
    new.recipients[recipient] = True
    return new, Receipt.success(RecipientAdded(recipient))


def remove_recipient(state: AidState, sender: bytes, recipient: bytes) -> tuple[AidState, Receipt]:
    if sender != state.organization:
        return state, Receipt.failure(TxError.UNAUTHORIZED)
    new = _clone(state)
    new.recipients[recipient] = False
    # registered bank hash is retained; re-enrollment restores eligibility
    return new, Receipt.success(RecipientRemoved(recipient))


def register_bank_account(
    state: AidState, sender: bytes, recipient: bytes, account: bytes
) -> tuple[AidState, Receipt]:
    if sender != state.organization:
        return state, Receipt.failure(TxError.UNAUTHORIZED)
    if not state.recipients.get(recipient, False):
        return state, Receipt.failure(TxError.NOT_RECIPIENT)
    if len(account) == 0:
        return state, Receipt.failure(TxError.EMPTY_ACCOUNT)
    digest = keccak256(account)  # packed encoding of one byte string: the raw bytes
    new = _clone(state)
    new.bank_accounts[recipient] = digest
    return new, Receipt.success(BankAccountRegistered(recipient, digest))


def add_funds(state: AidState, sender: bytes, amount: int) -> tuple[AidState, Receipt]:
    if sender != state.organization:
        return state, Receipt.failure(TxError.UNAUTHORIZED)
    balance = state.balances.get(state.organization, 0) + amount
    if balance > AMOUNT_MAX:
        return state, Receipt.failure(TxError.OVERFLOW)
    new = _clone(state)
    new.balances[state.organization] = balance
    return new, Receipt.success(FundsAdded(amount))


def send_allowance(
    state: AidState, sender: bytes, recipient: bytes, amount: int
) -> tuple[AidState, Receipt]:
    if sender != state.organization:
        return state, Receipt.failure(TxError.UNAUTHORIZED)
    if not state.recipients.get(recipient, False):
        return state, Receipt.failure(TxError.NOT_RECIPIENT)
    balance = state.balances.get(state.organization, 0)
    if balance < amount:
        return state, Receipt.failure(TxError.INSUFFICIENT_FUNDS)
    new = _clone(state)
    # the amount leaves the ledger toward an off-chain bank transfer;
    # the recipient's on-ledger balance is never credited
    new.balances[state.organization] = balance - amount
    return new, Receipt.success(AllowanceSent(recipient, amount))


def get_balance(state: AidState, caller: bytes) -> int:
    """Read-only balance lookup, absent keys read as zero."""
    return state.balances.get(caller, 0)


def is_recipient(state: AidState, address: bytes) -> bool:
    return state.recipients.get(address, False)


def apply(state: AidState, sender: bytes, payload: Payload) -> tuple[AidState, Receipt]:
    """Dispatch one payload; identical inputs yield byte-identical outputs."""
    if isinstance(payload, AddRecipient):
        return add_recipient(state, sender, payload.recipient)
    if isinstance(payload, RemoveRecipient):
        return remove_recipient(state, sender, payload.recipient)
    if isinstance(payload, RegisterBankAccount):
        return register_bank_account(state, sender, payload.recipient, payload.account)
    if isinstance(payload, AddFunds):
        return add_funds(state, sender, payload.amount)
    if isinstance(payload, SendAllowance):
        return send_allowance(state, sender, payload.recipient, payload.amount)
    raise TypeError(f"unknown payload: {payload!r}")


# -- canonical byte layouts ---------------------------------------------------
# Normative: consensus state commitments hash exactly these bytes.

def encode_state(state: AidState) -> bytes:
    w = Writer()
    w.raw(state.organization, expect_len=20)
    w.u32(len(state.recipients))
    for addr in sorted(state.recipients):
        w.raw(addr, expect_len=20).u8(1 if state.recipients[addr] else 0)
    w.u32(len(state.balances))
    for addr in sorted(state.balances):
        w.raw(addr, expect_len=20).u128(state.balances[addr])
    w.u32(len(state.bank_accounts))
    for addr in sorted(state.bank_accounts):
        w.raw(addr, expect_len=20).raw(state.bank_accounts[addr], expect_len=32)
    return w.getvalue()


def decode_state(data: bytes) -> AidState:
    r = Reader(data)
    organization = r.raw(20)
    recipients = {}
    for _ in range(r.u32()):
        addr = r.raw(20)
        recipients[addr] = bool(r.u8())
    balances = {}
    for _ in range(r.u32()):
        addr = r.raw(20)
        balances[addr] = r.u128()
    bank_accounts = {}
    for _ in range(r.u32()):
        addr = r.raw(20)
        bank_accounts[addr] = r.raw(32)
    r.expect_end()
    return AidState(organization, recipients, balances, bank_accounts)


def state_root(state: AidState) -> bytes:
    return keccak256(encode_state(state))


_PAYLOAD_TAGS = {
    AddRecipient: 1,
    RemoveRecipient: 2,
    RegisterBankAccount: 3,
    AddFunds: 4,
    SendAllowance: 5,
}


def encode_payload(payload: Payload) -> bytes:
    w = Writer()
    w.u8(_PAYLOAD_TAGS[type(payload)])
    if isinstance(payload, (AddRecipient, RemoveRecipient)):
        w.raw(payload.recipient, expect_len=20)
    elif isinstance(payload, RegisterBankAccount):
        w.raw(payload.recipient, expect_len=20).var_bytes(payload.account)
    elif isinstance(payload, AddFunds):
        w.u128(payload.amount)
    elif isinstance(payload, SendAllowance):
        w.raw(payload.recipient, expect_len=20).u128(payload.amount)
    return w.getvalue()


def decode_payload(data: bytes) -> Payload:
    r = Reader(data)
    payload = read_payload(r)
    r.expect_end()
    return payload


def read_payload(r: Reader) -> Payload:
    tag = r.u8()
    if tag == 1:
        return AddRecipient(r.raw(20))
    if tag == 2:
        return RemoveRecipient(r.raw(20))
    if tag == 3:
        return RegisterBankAccount(r.raw(20), r.var_bytes())
    if tag == 4:
        return AddFunds(r.u128())
    if tag == 5:
        return SendAllowance(r.raw(20), r.u128())
    raise ValueError(f"unknown payload tag {tag}")


_EVENT_TAGS = {
    RecipientAdded: 1,
    RecipientRemoved: 2,
    BankAccountRegistered: 3,
    FundsAdded: 4,
    AllowanceSent: 5,
}

EVENT_NAMES = {
    RecipientAdded: "RecipientAdded",
    RecipientRemoved: "RecipientRemoved",
    BankAccountRegistered: "BankAccountRegistered",
    FundsAdded: "FundsAdded",
    AllowanceSent: "AllowanceSent",
}


def encode_event(event: Event) -> bytes:
    w = Writer()
    w.u8(_EVENT_TAGS[type(event)])
    if isinstance(event, (RecipientAdded, RecipientRemoved)):
        w.raw(event.recipient, expect_len=20)
    elif isinstance(event, BankAccountRegistered):
        w.raw(event.recipient, expect_len=20).raw(event.account_hash, expect_len=32)
    elif isinstance(event, FundsAdded):
        w.u128(event.amount)
    elif isinstance(event, AllowanceSent):
        w.raw(event.recipient, expect_len=20).u128(event.amount)
    return w.getvalue()
