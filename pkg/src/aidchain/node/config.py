"""Node configuration: one JSON file plus environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

_ENV_PREFIX = "AIDCHAIN_"
_TRUTHY = {"1", "true", "yes", "on"}


@dataclass
class NodeConfig:
    listen: str = "127.0.0.1:9080"
    data_dir: str = "data"
    genesis_path: str = "genesis.json"
    key_path: str = "node.key"
    strict_bank_account_mode: bool | None = None  # None: use the genesis default
    bank_sink: str = "bank_instructions.jsonl"
    peers: dict[str, str] = field(default_factory=dict)  # validator address -> base URL
    produce_empty_blocks: bool = False

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])

    def to_json(self) -> dict:
        return {
            "listen": self.listen,
            "data_dir": self.data_dir,
            "genesis_path": self.genesis_path,
            "key_path": self.key_path,
            "strict_bank_account_mode": self.strict_bank_account_mode,
            "bank_sink": self.bank_sink,
            "peers": self.peers,
            "produce_empty_blocks": self.produce_empty_blocks,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path, env: dict[str, str] | None = None) -> "NodeConfig":
        payload = json.loads(Path(path).read_text())
        config = cls(
            listen=payload.get("listen", cls.listen),
            data_dir=payload.get("data_dir", cls.data_dir),
            genesis_path=payload.get("genesis_path", cls.genesis_path),
            key_path=payload.get("key_path", cls.key_path),
            strict_bank_account_mode=payload.get("strict_bank_account_mode"),
            bank_sink=payload.get("bank_sink", cls.bank_sink),
            peers=dict(payload.get("peers", {})),
            produce_empty_blocks=bool(payload.get("produce_empty_blocks", False)),
        )
        base = Path(path).parent
        for attr in ("data_dir", "genesis_path", "key_path"):
            value = Path(getattr(config, attr))
            if not value.is_absolute():
                setattr(config, attr, str(base / value))
        config.apply_env(env if env is not None else dict(os.environ))
        return config

    def apply_env(self, env: dict[str, str]) -> None:
        if _ENV_PREFIX + "LISTEN" in env:
            self.listen = env[_ENV_PREFIX + "LISTEN"]
        if _ENV_PREFIX + "DATA_DIR" in env:
            self.data_dir = env[_ENV_PREFIX + "DATA_DIR"]
        if _ENV_PREFIX + "GENESIS" in env:
            self.genesis_path = env[_ENV_PREFIX + "GENESIS"]
        if _ENV_PREFIX + "KEY" in env:
            self.key_path = env[_ENV_PREFIX + "KEY"]
        if _ENV_PREFIX + "STRICT_MODE" in env:
            self.strict_bank_account_mode = env[_ENV_PREFIX + "STRICT_MODE"].lower() in _TRUTHY
        if _ENV_PREFIX + "BANK_SINK" in env:
            self.bank_sink = env[_ENV_PREFIX + "BANK_SINK"]
