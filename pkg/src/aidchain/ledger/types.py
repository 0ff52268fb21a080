"""Domain types for the aid-distribution contract state machine."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Union

ADDRESS_LEN = 20
ZERO_ADDRESS = b"\x00" * ADDRESS_LEN

AMOUNT_MAX = 2**128 - 1  # amounts are unsigned 128-bit indivisible units


def format_address(address: bytes) -> str:
    """Canonical textual form: 0x-prefixed lowercase hex."""
    if len(address) != ADDRESS_LEN:
        raise ValueError(f"address must be {ADDRESS_LEN} bytes")
    return "0x" + address.hex()


def parse_address(text: str) -> bytes:
    if not text.startswith("0x") and not text.startswith("0X"):
        raise ValueError("address must start with 0x")
    raw = bytes.fromhex(text[2:])
    if len(raw) != ADDRESS_LEN:
        raise ValueError(f"address must encode {ADDRESS_LEN} bytes")
    return raw


class TxError(IntEnum):
    """Closed set of rejection codes, stable integers for the API."""

    UNAUTHORIZED = 1
    NOT_RECIPIENT = 2
    EMPTY_ACCOUNT = 3
    INSUFFICIENT_FUNDS = 4
    OVERFLOW = 5


# -- payloads: one variant per state-mutating contract function --------------

@dataclass(frozen=True)
class AddRecipient:
    recipient: bytes


@dataclass(frozen=True)
class RemoveRecipient:
    recipient: bytes


@dataclass(frozen=True)
class RegisterBankAccount:
    recipient: bytes
    account: bytes


@dataclass(frozen=True)
class AddFunds:
    amount: int


@dataclass(frozen=True)
class SendAllowance:
    recipient: bytes
    amount: int


Payload = Union[AddRecipient, RemoveRecipient, RegisterBankAccount, AddFunds, SendAllowance]


# -- events: the audit trail --------------------------------------------------

@dataclass(frozen=True)
class RecipientAdded:
    recipient: bytes


@dataclass(frozen=True)
class RecipientRemoved:
    recipient: bytes


@dataclass(frozen=True)
class BankAccountRegistered:
    recipient: bytes
    account_hash: bytes  # 32-byte keccak-256 of the account bytes


@dataclass(frozen=True)
class FundsAdded:
    amount: int


@dataclass(frozen=True)
class AllowanceSent:
    recipient: bytes
    amount: int


Event = Union[RecipientAdded, RecipientRemoved, BankAccountRegistered, FundsAdded, AllowanceSent]


@dataclass(frozen=True)
class Receipt:
    """Outcome of one applied payload: all-or-nothing.

    A failure receipt carries an error code and no events; the state it
    was produced against is returned unchanged.
    """

    ok: bool
    error: TxError | None = None
    events: tuple[Event, ...] = ()

    @classmethod
    def failure(cls, error: TxError) -> "Receipt":
        return cls(ok=False, error=error)

    @classmethod
    def success(cls, *events: Event) -> "Receipt":
        return cls(ok=True, events=events)


@dataclass
class AidState:
    """Replicated contract state.

    The organization address is fixed at genesis. Recipient flags and
    balances keep every key ever written (removal stores an explicit
    False, mirroring the contract's unconditional assignment), which
    makes the canonical serialization a complete audit of touched keys.
    Treat committed instances as immutable: transitions return fresh
    states and never mutate their input.
    """

    organization: bytes
    recipients: dict[bytes, bool] = field(default_factory=dict)
    balances: dict[bytes, int] = field(default_factory=dict)
    bank_accounts: dict[bytes, bytes] = field(default_factory=dict)
