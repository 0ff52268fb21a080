"""Blocks, validator sets and consensus messages with canonical codecs."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from ..codec import Reader, Writer
from ..crypto import KeyPair, Signature, derive_address, keccak256, sign_digest, verify_digest
from ..node.tx import Transaction, tx_hash

ZERO_HASH = b"\x00" * 32


@dataclass(frozen=True)
class ValidatorSet:
    """Fixed consortium membership, order set at genesis."""

    validators: tuple[bytes, ...]

    def __post_init__(self):
        if len(set(self.validators)) != len(self.validators):
            raise ValueError("validator addresses must be distinct")

    @property
    def n(self) -> int:
        return len(self.validators)

    @property
    def f(self) -> int:
        """Tolerated faults: floor((N - 1) / 3)."""
        return (self.n - 1) // 3

    @property
    def quorum(self) -> int:
        return 2 * self.f + 1

    def __contains__(self, address: bytes) -> bool:
        return address in self.validators

    def proposer_for(self, height: int, round: int) -> bytes:
        return self.validators[(height + round) % self.n]


def proposer_for(height: int, round: int, validator_set: ValidatorSet) -> bytes:
    """Round-robin rotation: validators[(height + round) mod N]."""
    return validator_set.proposer_for(height, round)


@dataclass(frozen=True)
class BlockHeader:
    height: int
    parent_hash: bytes
    tx_root: bytes
    state_root: bytes
    proposer: bytes
    round: int
    timestamp: int  # seconds

    def encode(self) -> bytes:
        w = Writer()
        w.u64(self.height)
        w.raw(self.parent_hash, expect_len=32)
        w.raw(self.tx_root, expect_len=32)
        w.raw(self.state_root, expect_len=32)
        w.raw(self.proposer, expect_len=20)
        w.u64(self.round)
        w.u64(self.timestamp)
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> "BlockHeader":
        return cls(
            height=r.u64(),
            parent_hash=r.raw(32),
            tx_root=r.raw(32),
            state_root=r.raw(32),
            proposer=r.raw(20),
            round=r.u64(),
            timestamp=r.u64(),
        )


@lru_cache(maxsize=1 << 12)
def _header_hash(encoded: bytes) -> bytes:
    return keccak256(encoded)


def header_hash(header: BlockHeader) -> bytes:
    return _header_hash(header.encode())


def tx_root_of(transactions: tuple[Transaction, ...]) -> bytes:
    """keccak-256 over the concatenation of transaction hashes."""
    return keccak256(b"".join(tx_hash(tx) for tx in transactions))


Seal = tuple[bytes, Signature]  # (validator address, signature over the commit digest)


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    transactions: tuple[Transaction, ...]
    commit_seals: tuple[Seal, ...] = ()

    @property
    def hash(self) -> bytes:
        """Block identity: the header hash. Seals are outside identity."""
        return header_hash(self.header)

    def with_seals(self, seals: tuple[Seal, ...]) -> "Block":
        return Block(self.header, self.transactions, seals)

    def encode(self) -> bytes:
        w = Writer()
        w.raw(self.header.encode(), expect_len=140)
        w.u32(len(self.transactions))
        for tx in self.transactions:
            w.raw(tx.encode())
        w.u32(len(self.commit_seals))
        for validator, sig in self.commit_seals:
            w.raw(validator, expect_len=20)
            w.raw(sig.public_key, expect_len=64)
            w.raw(sig.encode(), expect_len=64)
        return w.getvalue()

    @classmethod
    def decode(cls, data: bytes) -> "Block":
        r = Reader(data)
        block = cls.read(r)
        r.expect_end()
        return block

    @classmethod
    def read(cls, r: Reader) -> "Block":
        header = BlockHeader.read(r)
        transactions = tuple(Transaction.read(r) for _ in range(r.u32()))
        seals = []
        for _ in range(r.u32()):
            validator = r.raw(20)
            public_key = r.raw(64)
            seals.append((validator, Signature.decode(r.raw(64), public_key)))
        return cls(header, transactions, tuple(seals))


def genesis_block(organization_state_root: bytes, timestamp: int) -> Block:
    """Synthetic height-0 block derived from genesis configuration."""
    header = BlockHeader(
        height=0,
        parent_hash=ZERO_HASH,
        tx_root=tx_root_of(()),
        state_root=organization_state_root,
        proposer=b"\x00" * 20,
        round=0,
        timestamp=timestamp,
    )
    return Block(header, ())


# -- consensus messages --------------------------------------------------------
# Proposal, Prepare and RoundChange sign the keccak-256 of their
# canonical prefix (everything but the signature). Commit signs the block
# hash itself, which is exactly what a block seal must verify against, so
# finalization can reuse commit signatures as seals verbatim. A proposal
# is signed by the proposer of its (height, message round): a locked
# block may be re-proposed byte-identically in a later round by that
# round's proposer, keeping the block id stable across rounds.

@dataclass(frozen=True)
class Proposal:
    height: int
    round: int
    block: Block
    signature: Signature


@dataclass(frozen=True)
class Prepare:
    height: int
    round: int
    block_hash: bytes
    signer: bytes
    signature: Signature


@dataclass(frozen=True)
class Commit:
    height: int
    round: int
    block_hash: bytes
    signer: bytes
    signature: Signature


@dataclass(frozen=True)
class RoundChange:
    height: int
    new_round: int
    signer: bytes
    signature: Signature


Message = Union[Proposal, Prepare, Commit, RoundChange]

_TAGS = {Proposal: 1, Prepare: 2, Commit: 3, RoundChange: 4}
MESSAGE_NAMES = {Proposal: "Proposal", Prepare: "Prepare", Commit: "Commit", RoundChange: "RoundChange"}


def _prefix(msg: Message) -> bytes:
    w = Writer()
    w.u8(_TAGS[type(msg)])
    if isinstance(msg, Proposal):
        w.u64(msg.height).u64(msg.round).var_bytes(msg.block.encode())
    elif isinstance(msg, (Prepare, Commit)):
        w.u64(msg.height).u64(msg.round)
        w.raw(msg.block_hash, expect_len=32)
        w.raw(msg.signer, expect_len=20)
    else:
        w.u64(msg.height).u64(msg.new_round)
        w.raw(msg.signer, expect_len=20)
    return w.getvalue()


def signing_digest(msg: Message) -> bytes:
    if isinstance(msg, Commit):
        return msg.block_hash  # seals verify against the header hash
    return keccak256(_prefix(msg))


def encode_message(msg: Message) -> bytes:
    w = Writer()
    w.raw(_prefix(msg))
    w.raw(msg.signature.public_key, expect_len=64)
    w.raw(msg.signature.encode(), expect_len=64)
    return w.getvalue()


def decode_message(data: bytes) -> Message:
    r = Reader(data)
    tag = r.u8()
    if tag == 1:
        height, round = r.u64(), r.u64()
        block = Block.decode(r.var_bytes())
        fields = (height, round, block)
    elif tag in (2, 3):
        fields = (r.u64(), r.u64(), r.raw(32), r.raw(20))
    elif tag == 4:
        fields = (r.u64(), r.u64(), r.raw(20))
    else:
        raise ValueError(f"unknown message tag {tag}")
    public_key = r.raw(64)
    signature = Signature.decode(r.raw(64), public_key)
    r.expect_end()
    if tag == 1:
        return Proposal(*fields, signature)
    if tag == 2:
        return Prepare(*fields, signature)
    if tag == 3:
        return Commit(*fields, signature)
    return RoundChange(*fields, signature)


def message_hash(msg: Message) -> bytes:
    return keccak256(encode_message(msg))


def sign_message(keypair: KeyPair, msg: Message) -> Message:
    signed = sign_digest(keypair, signing_digest(msg))
    return type(msg)(**{**msg.__dict__, "signature": signed})


def expected_signer(msg: Message, validator_set: ValidatorSet) -> bytes:
    if isinstance(msg, Proposal):
        return validator_set.proposer_for(msg.height, msg.round)
    return msg.signer


def verify_message(msg: Message, validator_set: ValidatorSet) -> bool:
    """Signature valid, signer in the validator set, address binding holds."""
    signer = expected_signer(msg, validator_set)
    if signer not in validator_set:
        return False
    if not verify_digest(msg.signature, signing_digest(msg)):
        return False
    try:
        return derive_address(msg.signature.public_key) == signer
    except ValueError:
        return False
