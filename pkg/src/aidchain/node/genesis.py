"""Genesis document: chain identity, organization binding, validator set."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..consensus import Block, ValidatorSet, genesis_block
from ..ledger import AidState, format_address, init, parse_address, state_root


@dataclass(frozen=True)
class GenesisDoc:
    chain_id: str
    organization: bytes
    validators: tuple[bytes, ...]
    strict_bank_account_mode: bool
    timestamp: int

    def __post_init__(self):
        if len(set(self.validators)) != len(self.validators):
            raise ValueError("genesis validators must be distinct")

    def validator_set(self) -> ValidatorSet:
        return ValidatorSet(self.validators)

    def initial_state(self) -> AidState:
        return init(self.organization)

    def block(self) -> Block:
        """The synthetic height-0 block every chain copy starts from."""
        return genesis_block(state_root(self.initial_state()), self.timestamp)

    def to_json(self) -> dict:
        return {
            "chain_id": self.chain_id,
            "organization": format_address(self.organization),
            "validators": [format_address(v) for v in self.validators],
            "strict_bank_account_mode": self.strict_bank_account_mode,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "GenesisDoc":
        return cls(
            chain_id=payload["chain_id"],
            organization=parse_address(payload["organization"]),
            validators=tuple(parse_address(v) for v in payload["validators"]),
            strict_bank_account_mode=bool(payload["strict_bank_account_mode"]),
            timestamp=int(payload["timestamp"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GenesisDoc":
        return cls.from_json(json.loads(Path(path).read_text()))
