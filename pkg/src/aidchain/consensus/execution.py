"""Block building and validation: deterministic re-execution of payloads."""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import ledger
from ..ledger import AidState, AllowanceSent, Receipt
from ..node.tx import Transaction, tx_hash
from .types import Block, BlockHeader, ValidatorSet, header_hash, tx_root_of


@dataclass(frozen=True)
class InstructionDraft:
    """Data captured per AllowanceSent at its exact execution instant."""

    tx_index: int
    event_index: int
    recipient: bytes
    amount: int
    account_hash: bytes | None


@dataclass
class ExecutionResult:
    state: AidState
    nonces: dict[bytes, int]
    receipts: list[Receipt] = field(default_factory=list)
    instructions: list[InstructionDraft] = field(default_factory=list)


def execute_transactions(
    state: AidState, nonces: dict[bytes, int], transactions: tuple[Transaction, ...]
) -> ExecutionResult:
    """Apply transactions in order; admission-level validity is assumed.

    Contract-level failures are recorded as failure receipts and still
    consume the sender's nonce; they change no state and emit nothing.
    """
    result = ExecutionResult(state=state, nonces=dict(nonces))
    for tx_index, tx in enumerate(transactions):
        new_state, receipt = ledger.apply(result.state, tx.sender, tx.payload)
        result.state = new_state
        result.nonces[tx.sender] = result.nonces.get(tx.sender, 0) + 1
        result.receipts.append(receipt)
        for event_index, event in enumerate(receipt.events):
            if isinstance(event, AllowanceSent):
                result.instructions.append(InstructionDraft(
                    tx_index=tx_index,
                    event_index=event_index,
                    recipient=event.recipient,
                    amount=event.amount,
                    account_hash=new_state.bank_accounts.get(event.recipient),
                ))
    return result


def admissible_in_block(tx: Transaction, expected_nonce: int) -> bool:
    """Inclusion-level validity: correct signature and exact next nonce."""
    return tx.nonce == expected_nonce and tx.verify()


def build_block(
    parent: BlockHeader,
    parent_state: AidState,
    parent_nonces: dict[bytes, int],
    proposer: bytes,
    round: int,
    timestamp: int,
    candidate_txs: list[Transaction],
    max_txs: int = 256,
) -> tuple[Block, ExecutionResult]:
    """Assemble a block from candidates, skipping inadmissible ones."""
    selected: list[Transaction] = []
    running = dict(parent_nonces)
    for tx in candidate_txs:
        if len(selected) >= max_txs:
            break
        if admissible_in_block(tx, running.get(tx.sender, 0)):
            selected.append(tx)
            running[tx.sender] = tx.nonce + 1
    transactions = tuple(selected)
    result = execute_transactions(parent_state, parent_nonces, transactions)
    header = BlockHeader(
        height=parent.height + 1,
        parent_hash=header_hash(parent),
        tx_root=tx_root_of(transactions),
        state_root=ledger.state_root(result.state),
        proposer=proposer,
        round=round,
        timestamp=timestamp,
    )
    return Block(header, transactions), result


def validate_block(
    block: Block,
    parent: BlockHeader,
    parent_state: AidState,
    parent_nonces: dict[bytes, int],
    validator_set: ValidatorSet,
) -> tuple[bool, str, ExecutionResult | None]:
    """Full structural and semantic check against the parent.

    Returns (ok, reason, execution result); the result is reused by
    callers that go on to commit the block, so re-execution happens once.
    """
    header = block.header
    if header.height != parent.height + 1:
        return False, "height not contiguous with parent", None
    if header.parent_hash != header_hash(parent):
        return False, "parent hash mismatch", None
    if header.proposer != validator_set.proposer_for(header.height, header.round):
        return False, "wrong proposer for height/round", None
    running = dict(parent_nonces)
    for tx in block.transactions:
        if tx.nonce != running.get(tx.sender, 0):
            return False, "transaction nonce out of sequence", None
        if not tx.verify():
            return False, "invalid transaction signature", None
        running[tx.sender] = tx.nonce + 1
    if header.tx_root != tx_root_of(block.transactions):
        return False, "tx root mismatch", None
    result = execute_transactions(parent_state, parent_nonces, block.transactions)
    if header.state_root != ledger.state_root(result.state):
        return False, "state root mismatch", None
    return True, "", result


def verify_seals(block: Block, validator_set: ValidatorSet) -> tuple[bool, str]:
    """Quorum of distinct, valid commit signatures over the header hash."""
    from ..crypto import derive_address, verify_digest

    block_id = header_hash(block.header)
    seen: set[bytes] = set()
    for validator, sig in block.commit_seals:
        if validator not in validator_set:
            return False, "seal from non-validator"
        if validator in seen:
            return False, "duplicate seal"
        if not verify_digest(sig, block_id):
            return False, "invalid seal signature"
        try:
            if derive_address(sig.public_key) != validator:
                return False, "seal key does not match validator"
        except ValueError:
            return False, "seal key not a curve point"
        seen.add(validator)
    if len(seen) < validator_set.quorum:
        return False, f"only {len(seen)} seals, quorum is {validator_set.quorum}"
    return True, ""
