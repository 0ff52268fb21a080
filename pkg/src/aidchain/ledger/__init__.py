"""Contract state machine: types, transitions, canonical serialization."""

from .machine import (
    add_funds,
    add_recipient,
    apply,
    decode_payload,
    decode_state,
    encode_event,
    encode_payload,
    encode_state,
    get_balance,
    init,
    is_recipient,
    read_payload,
    register_bank_account,
    remove_recipient,
    send_allowance,
    state_root,
    EVENT_NAMES,
)
from .types import (
    ADDRESS_LEN,
    AMOUNT_MAX,
    ZERO_ADDRESS,
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
    format_address,
    parse_address,
)

__all__ = [
    "ADDRESS_LEN",
    "AMOUNT_MAX",
    "EVENT_NAMES",
    "ZERO_ADDRESS",
    "AddFunds",
    "AddRecipient",
    "AidState",
    "AllowanceSent",
    "BankAccountRegistered",
    "Event",
    "FundsAdded",
    "Payload",
    "Receipt",
    "RecipientAdded",
    "RecipientRemoved",
    "RegisterBankAccount",
    "RemoveRecipient",
    "SendAllowance",
    "TxError",
    "add_funds",
    "add_recipient",
    "apply",
    "decode_payload",
    "decode_state",
    "encode_event",
    "encode_payload",
    "encode_state",
    "format_address",
    "get_balance",
    "init",
    "is_recipient",
    "parse_address",
    "read_payload",
    "register_bank_account",
    "remove_recipient",
    "send_allowance",
    "state_root",
]
