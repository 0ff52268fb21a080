"""Quorum-based three-phase block production for a fixed validator set.

One engine instance is a single logical event loop for one validator:
every input (message, timer expiry, new-transaction poke) arrives as a
method call carrying the host's current time, and every output is an
action tuple the host executes (broadcast a message, arm a timer,
persist a finalized block). The engine never reads a clock or socket,
which is what makes it drivable both by the deterministic simulator and
by a real node.

Vote handling, in brief: proposals are validated by full re-execution;
a validator that observes a prepare quorum sends a commit and locks on
that block for the remainder of the height, so no honest validator can
contribute commits to two different blocks at one height. Commits are
tallied per block hash across rounds (a commit signs the block hash, so
it is round-free evidence) and a quorum of them finalizes the block,
with the commit signatures attached verbatim as seals.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Optional, Protocol

from ..crypto import KeyPair, sign_digest
from ..ledger import AidState
from ..node.tx import Transaction
from .execution import ExecutionResult, build_block, validate_block
from .types import (
    Block,
    Commit,
    Message,
    Prepare,
    Proposal,
    RoundChange,
    ValidatorSet,
    sign_message,
    verify_message,
)


class NotProposerError(RuntimeError):
    """propose() called by a validator that is not the round's proposer."""


class TxSource(Protocol):
    def candidates(self) -> list[Transaction]: ...
    def remove_committed(self, transactions: tuple[Transaction, ...]) -> None: ...


@dataclass
class EngineConfig:
    base_timeout_ms: int = 500
    timeout_cap_ms: int = 30_000
    heartbeat_ms: int = 1_000
    produce_empty_blocks: bool = False
    max_block_txs: int = 256
    buffer_horizon: int = 8  # heights ahead worth buffering


# Actions returned to the host:
#   ("broadcast", Message)            send to every other validator
#   ("timer", seq, delay_ms)          arm a timer; fire on_timeout(seq)
#   ("finalized", Block, ExecutionResult)   block reached commit quorum
Action = tuple


class Engine:
    def __init__(
        self,
        keypair: KeyPair,
        validator_set: ValidatorSet,
        genesis: Block,
        genesis_state: AidState,
        mempool: Optional[TxSource] = None,
        config: Optional[EngineConfig] = None,
    ) -> None:
        self.keypair = keypair
        self.address = keypair.address
        self.vset = validator_set
        self.config = config or EngineConfig()
        self.mempool = mempool
        self.parent = genesis.header
        self.parent_state = genesis_state
        self.parent_nonces: dict[bytes, int] = {}
        self.height = genesis.header.height + 1
        self.round = 0
        self.rounds_entered = 0  # (height, round) slots this engine has engaged
        self.metrics: Counter = Counter()
        self._timer_seq = 0
        self._round_timer: int | None = None
        self._heartbeat_timer: int | None = None
        self._future: list[Message] = []
        self._reset_height_books()

    # -- bookkeeping -----------------------------------------------------------

    def _reset_height_books(self) -> None:
        self.accepted: dict[int, bytes] = {}  # round -> accepted block hash
        self.block_cache: dict[bytes, tuple[Block, ExecutionResult]] = {}
        self.prepares: dict[tuple[int, bytes], set[bytes]] = defaultdict(set)
        self.commits: dict[bytes, dict[bytes, object]] = defaultdict(dict)
        self.round_changes: dict[int, set[bytes]] = defaultdict(set)
        self.locked_hash: bytes | None = None
        self.locked_block: Block | None = None
        self.sent_prepare: set[int] = set()
        self.sent_commit: set[int] = set()
        self.proposed: set[int] = set()
        self._pending_proposals: dict[int, Proposal] = {}  # future rounds, this height

    @property
    def head_height(self) -> int:
        """Height of the last finalized block."""
        return self.parent.height

    def is_proposer(self) -> bool:
        return self.vset.proposer_for(self.height, self.round) == self.address

    def timeout_duration(self, round: int) -> int:
        """Round-change timeout: doubling from the base, capped."""
        return min(self.config.base_timeout_ms * (2 ** round), self.config.timeout_cap_ms)

    def _next_timer(self, actions: list[Action], delay_ms: int) -> int:
        self._timer_seq += 1
        actions.append(("timer", self._timer_seq, delay_ms))
        return self._timer_seq

    def _arm_round_timer(self, actions: list[Action]) -> None:
        delay = self.timeout_duration(self.round)
        if self.config.produce_empty_blocks and self.round == 0:
            delay += self.config.heartbeat_ms  # leave room for the idle heartbeat
        self._round_timer = self._next_timer(actions, delay)

    def _broadcast(self, actions: list[Action], msg: Message) -> None:
        actions.append(("broadcast", sign_message(self.keypair, msg)))

    # -- lifecycle ---------------------------------------------------------------

    def start(self, now_ms: int) -> list[Action]:
        """Begin consensus for the height after the genesis/parent block."""
        actions: list[Action] = []
        self._enter_height(now_ms, actions)
        return actions

    def _enter_height(self, now_ms: int, actions: list[Action]) -> None:
        self.round = 0
        self.rounds_entered += 1
        self._reset_height_books()
        self._round_timer = None
        self._heartbeat_timer = None
        have_txs = bool(self.mempool and self.mempool.candidates())
        if self.is_proposer():
            if have_txs:
                actions.extend(self._propose(now_ms))
            elif self.config.produce_empty_blocks:
                self._heartbeat_timer = self._next_timer(actions, self.config.heartbeat_ms)
        if have_txs or self.config.produce_empty_blocks:
            self._arm_round_timer(actions)
        self._replay_buffered(now_ms, actions)

    def poke(self, now_ms: int) -> list[Action]:
        """A transaction became available; engage the current round."""
        actions: list[Action] = []
        if self.is_proposer() and self.round not in self.proposed and self._round_justified():
            actions.extend(self._propose(now_ms))
        if self._round_timer is None:
            self._arm_round_timer(actions)
        return actions

    # -- proposing ---------------------------------------------------------------

    def _round_justified(self) -> bool:
        """Round 0 needs no justification; later rounds need a quorum of
        round changes, so a lone fast clock cannot hijack proposing."""
        if self.round == 0:
            return True
        return len(self.round_changes[self.round]) >= self.vset.quorum

    def propose(self, now_ms: int) -> list[Action]:
        if not self.is_proposer():
            raise NotProposerError(
                f"validator {self.address.hex()} is not proposer for "
                f"height {self.height} round {self.round}"
            )
        if self.round in self.proposed or not self._round_justified():
            return []
        return self._propose(now_ms)

    def _propose(self, now_ms: int) -> list[Action]:
        actions: list[Action] = []
        self.proposed.add(self.round)
        if self.locked_block is not None:
            block = self.locked_block  # re-propose byte-identical
            result = self.block_cache[self.locked_hash][1]
        else:
            candidates = self.mempool.candidates() if self.mempool else []
            block, result = build_block(
                parent=self.parent,
                parent_state=self.parent_state,
                parent_nonces=self.parent_nonces,
                proposer=self.address,
                round=self.round,
                timestamp=now_ms // 1000,
                candidate_txs=candidates,
                max_txs=self.config.max_block_txs,
            )
        proposal = Proposal(self.height, self.round, block, None)  # type: ignore[arg-type]
        self._broadcast(actions, proposal)
        if self._round_timer is None:
            self._arm_round_timer(actions)
        self._adopt_block(now_ms, block, result, actions)
        return actions

    # -- inbound messages ----------------------------------------------------------

    def on_message(self, now_ms: int, msg: Message) -> list[Action]:
        actions: list[Action] = []
        if not verify_message(msg, self.vset):
            self.metrics["dropped_invalid"] += 1
            return actions
        self._route(now_ms, msg, actions)
        return actions

    def _route(self, now_ms: int, msg: Message, actions: list[Action]) -> None:
        if msg.height < self.height:
            self.metrics["dropped_past_height"] += 1
            return
        if msg.height > self.height:
            if msg.height <= self.height + self.config.buffer_horizon and len(self._future) < 4096:
                self._future.append(msg)
                self.metrics["buffered_future"] += 1
            else:
                self.metrics["dropped_far_future"] += 1
            return
        if self._round_timer is None:
            self._arm_round_timer(actions)  # engage: peers are active at this height
        if isinstance(msg, Proposal):
            self._on_proposal(now_ms, msg, actions)
        elif isinstance(msg, Prepare):
            self._on_prepare(now_ms, msg, actions)
        elif isinstance(msg, Commit):
            self._on_commit(now_ms, msg, actions)
        else:
            self._on_round_change(now_ms, msg, actions)

    def _on_proposal(self, now_ms: int, msg: Proposal, actions: list[Action]) -> None:
        if msg.round < self.round:
            self.metrics["dropped_past_round"] += 1
            return
        if msg.round > self.round:
            self._pending_proposals.setdefault(msg.round, msg)
            return
        if self.round in self.accepted:
            self.metrics["dropped_duplicate_proposal"] += 1
            return
        header = msg.block.header
        if header.height != self.height or header.round > msg.round:
            self.metrics["dropped_malformed_proposal"] += 1
            return
        ok, _reason, result = validate_block(
            msg.block, self.parent, self.parent_state, self.parent_nonces, self.vset
        )
        if not ok:
            self.metrics["dropped_invalid_block"] += 1
            return
        if self._round_timer is None:
            self._arm_round_timer(actions)
        self._adopt_block(now_ms, msg.block, result, actions)

    def _adopt_block(
        self, now_ms: int, block: Block, result: ExecutionResult, actions: list[Action]
    ) -> None:
        """Cache a validated block; prepare for it unless locked elsewhere."""
        block_id = block.hash
        self.block_cache[block_id] = (block, result)
        self.accepted[self.round] = block_id
        if self.locked_hash is None or self.locked_hash == block_id:
            if self.round not in self.sent_prepare:
                self.sent_prepare.add(self.round)
                prepare = Prepare(self.height, self.round, block_id, self.address, None)  # type: ignore[arg-type]
                self._broadcast(actions, prepare)
                self.prepares[(self.round, block_id)].add(self.address)
        else:
            self.metrics["proposal_vs_lock"] += 1
        self._check_prepare_quorum(now_ms, actions)
        self._check_finalize(now_ms, block_id, actions)

    def _on_prepare(self, now_ms: int, msg: Prepare, actions: list[Action]) -> None:
        self.prepares[(msg.round, msg.block_hash)].add(msg.signer)
        if msg.round == self.round:
            self._check_prepare_quorum(now_ms, actions)

    def _check_prepare_quorum(self, now_ms: int, actions: list[Action]) -> None:
        block_id = self.accepted.get(self.round)
        if block_id is None or self.round in self.sent_commit:
            return
        if self.locked_hash is not None and self.locked_hash != block_id:
            return
        if len(self.prepares[(self.round, block_id)]) < self.vset.quorum:
            return
        # prepared: lock on this block and commit to it
        self.sent_commit.add(self.round)
        self.locked_hash = block_id
        self.locked_block = self.block_cache[block_id][0]
        seal = sign_digest(self.keypair, block_id)
        commit = Commit(self.height, self.round, block_id, self.address, seal)
        actions.append(("broadcast", commit))
        self.commits[block_id][self.address] = seal
        self._check_finalize(now_ms, block_id, actions)

    def _on_commit(self, now_ms: int, msg: Commit, actions: list[Action]) -> None:
        self.commits[msg.block_hash][msg.signer] = msg.signature
        self._check_finalize(now_ms, msg.block_hash, actions)

    def _check_finalize(self, now_ms: int, block_id: bytes, actions: list[Action]) -> None:
        if block_id not in self.block_cache:
            return
        votes = self.commits[block_id]
        if len(votes) < self.vset.quorum:
            return
        block, result = self.block_cache[block_id]
        order = {addr: i for i, addr in enumerate(self.vset.validators)}
        seals = tuple(
            (addr, votes[addr]) for addr in sorted(votes, key=order.__getitem__)
        )
        sealed = block.with_seals(seals)
        if self.mempool is not None:
            self.mempool.remove_committed(sealed.transactions)
        actions.append(("finalized", sealed, result))
        self.parent = sealed.header
        self.parent_state = result.state
        self.parent_nonces = result.nonces
        self.height += 1
        self._enter_height(now_ms, actions)

    def _on_round_change(self, now_ms: int, msg: RoundChange, actions: list[Action]) -> None:
        self.round_changes[msg.new_round].add(msg.signer)
        # f+1 validators already left this round: catch up without waiting
        if msg.new_round > self.round:
            if len(self.round_changes[msg.new_round]) >= self.vset.f + 1:
                self._move_to_round(now_ms, msg.new_round, actions)
            return
        self._maybe_propose_after_change(now_ms, actions)

    def _move_to_round(self, now_ms: int, new_round: int, actions: list[Action]) -> None:
        self.round = new_round
        self.rounds_entered += 1
        change = RoundChange(self.height, new_round, self.address, None)  # type: ignore[arg-type]
        self._broadcast(actions, change)
        self.round_changes[new_round].add(self.address)
        self._arm_round_timer(actions)
        pending = self._pending_proposals.pop(new_round, None)
        if pending is not None:
            self._on_proposal(now_ms, pending, actions)
        self._check_prepare_quorum(now_ms, actions)
        self._maybe_propose_after_change(now_ms, actions)

    def _maybe_propose_after_change(self, now_ms: int, actions: list[Action]) -> None:
        if (
            self.is_proposer()
            and self.round not in self.proposed
            and self._round_justified()
        ):
            actions.extend(self._propose(now_ms))

    # -- timers ---------------------------------------------------------------------

    def on_timeout(self, now_ms: int, timer_seq: int) -> list[Action]:
        actions: list[Action] = []
        if timer_seq == self._heartbeat_timer:
            self._heartbeat_timer = None
            if self.is_proposer() and self.round not in self.proposed and self._round_justified():
                actions.extend(self._propose(now_ms))
            return actions
        if timer_seq != self._round_timer:
            return actions  # stale timer from an earlier round or height
        self._round_timer = None
        self._move_to_round(now_ms, self.round + 1, actions)
        return actions

    # -- buffered future-height messages ----------------------------------------------

    def _replay_buffered(self, now_ms: int, actions: list[Action]) -> None:
        if not self._future:
            return
        ready = [m for m in self._future if m.height == self.height]
        self._future = [m for m in self._future if m.height > self.height]
        for msg in ready:
            self._route(now_ms, msg, actions)
