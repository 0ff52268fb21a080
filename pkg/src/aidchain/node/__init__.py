"""Full node assembly: admission, persistence, queries, bank sink.

Heavier submodules (service, api) are imported directly by their users
to keep this package importable from the consensus layer, which only
needs the transaction type.
"""

from .tx import Transaction, build_tx, tx_hash

__all__ = ["Transaction", "build_tx", "tx_hash"]
