"""aidchain: a permissioned consortium ledger for auditable aid disbursement."""

__version__ = "0.1.0"
