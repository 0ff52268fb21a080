"""Transaction admission and FIFO ordering ahead of proposal."""

from __future__ import annotations

from ..ledger import AMOUNT_MAX, AidState, RegisterBankAccount, SendAllowance
from .tx import Transaction, tx_hash

# admission rejection reasons, stable strings for the API
BAD_SIGNATURE = "bad_signature"
BAD_NONCE = "bad_nonce"
MALFORMED = "malformed"
STRICT_MODE_NO_ACCOUNT = "strict_mode_no_account"

MAX_ACCOUNT_LEN = 4096


def _well_formed(tx: Transaction) -> bool:
    payload = tx.payload
    if isinstance(payload, RegisterBankAccount) and len(payload.account) > MAX_ACCOUNT_LEN:
        return False
    amount = getattr(payload, "amount", 0)
    recipient = getattr(payload, "recipient", b"\x00" * 20)
    return 0 <= amount <= AMOUNT_MAX and len(recipient) == 20 and len(tx.sender) == 20


class Mempool:
    """FIFO pool; admission enforces signature, exact next nonce, form,
    and (in strict mode) a registered bank account for allowances."""

    def __init__(self, strict_bank_account_mode: bool = False) -> None:
        self.strict_bank_account_mode = strict_bank_account_mode
        self._txs: list[Transaction] = []
        self._known: set[bytes] = set()

    def __len__(self) -> int:
        return len(self._txs)

    def pending_count(self, sender: bytes) -> int:
        return sum(1 for tx in self._txs if tx.sender == sender)

    def next_nonce(self, sender: bytes, committed_nonces: dict[bytes, int]) -> int:
        """Next expected nonce, aware of both committed and pending txs."""
        return committed_nonces.get(sender, 0) + self.pending_count(sender)

    def admit(
        self,
        tx: Transaction,
        state: AidState,
        committed_nonces: dict[bytes, int],
    ) -> tuple[bool, str | None]:
        if not _well_formed(tx):
            return False, MALFORMED
        if not tx.verify():
            return False, BAD_SIGNATURE
        if tx.nonce != self.next_nonce(tx.sender, committed_nonces):
            return False, BAD_NONCE
        if self.strict_bank_account_mode and isinstance(tx.payload, SendAllowance):
            if tx.payload.recipient not in state.bank_accounts:
                return False, STRICT_MODE_NO_ACCOUNT
        digest = tx_hash(tx)
        if digest in self._known:
            return False, BAD_NONCE  # replay of a still-pending transaction
        self._known.add(digest)
        self._txs.append(tx)
        return True, None

    def contains(self, digest: bytes) -> bool:
        return digest in self._known

    # engine TxSource interface -------------------------------------------------

    def candidates(self) -> list[Transaction]:
        return list(self._txs)

    def remove_committed(self, transactions: tuple[Transaction, ...]) -> None:
        gone = {tx_hash(tx) for tx in transactions}
        if not gone:
            return
        self._txs = [tx for tx in self._txs if tx_hash(tx) not in gone]
        self._known -= gone

    def snapshot_hashes(self) -> list[bytes]:
        return [tx_hash(tx) for tx in self._txs]
