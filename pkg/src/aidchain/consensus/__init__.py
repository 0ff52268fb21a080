"""BFT block production among a fixed consortium validator set."""

from .engine import Engine, EngineConfig, NotProposerError
from .execution import (
    ExecutionResult,
    InstructionDraft,
    build_block,
    execute_transactions,
    validate_block,
    verify_seals,
)
from .types import (
    Block,
    BlockHeader,
    Commit,
    Message,
    MESSAGE_NAMES,
    Prepare,
    Proposal,
    RoundChange,
    ValidatorSet,
    ZERO_HASH,
    decode_message,
    encode_message,
    genesis_block,
    header_hash,
    message_hash,
    proposer_for,
    sign_message,
    signing_digest,
    tx_root_of,
    verify_message,
)

__all__ = [
    "Block",
    "BlockHeader",
    "Commit",
    "Engine",
    "EngineConfig",
    "ExecutionResult",
    "InstructionDraft",
    "MESSAGE_NAMES",
    "Message",
    "NotProposerError",
    "Prepare",
    "Proposal",
    "RoundChange",
    "ValidatorSet",
    "ZERO_HASH",
    "build_block",
    "decode_message",
    "encode_message",
    "execute_transactions",
    "genesis_block",
    "header_hash",
    "message_hash",
    "proposer_for",
    "sign_message",
    "signing_digest",
    "tx_root_of",
    "validate_block",
    "verify_message",
    "verify_seals",
]
