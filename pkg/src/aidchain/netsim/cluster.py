"""Consensus nodes hosted in the simulator, plus cluster assembly helpers.

The adapter translates engine actions into simulator primitives and
keeps each node's finalized chain. The byzantine wrapper turns a node
into an equivocating proposer: conflicting twin proposals split across
peers, with prepare and commit votes handed out for both twins.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..consensus import (
    Block,
    Commit,
    Engine,
    EngineConfig,
    ExecutionResult,
    Prepare,
    Proposal,
    ValidatorSet,
    genesis_block,
    sign_message,
)
from ..crypto import KeyPair, sign_digest
from ..ledger import AidState, init, state_root
from ..node.tx import Transaction, tx_hash
from .sim import NodeContext, SimConfig, Simulator


class ListMempool:
    """Minimal in-order transaction source for simulated nodes."""

    def __init__(self) -> None:
        self._txs: list[Transaction] = []
        self._known: set[bytes] = set()

    def submit(self, tx: Transaction) -> None:
        digest = tx_hash(tx)
        if digest not in self._known:
            self._known.add(digest)
            self._txs.append(tx)

    def candidates(self) -> list[Transaction]:
        return list(self._txs)

    def remove_committed(self, transactions: tuple[Transaction, ...]) -> None:
        gone = {tx_hash(tx) for tx in transactions}
        self._txs = [tx for tx in self._txs if tx_hash(tx) not in gone]


class ConsensusNode:
    """Simulator program wrapping one validator engine."""

    def __init__(self, name: str, engine: Engine) -> None:
        self.name = name
        self.engine = engine
        self.chain: list[Block] = []
        self.results: list[ExecutionResult] = []
        self.equivocating = False

    # fault hook used by Simulator.inject_fault(("byzantine-equivocate", name))
    def enable_equivocation(self) -> None:
        self.equivocating = True

    @property
    def head_height(self) -> int:
        return self.engine.head_height

    def start(self, ctx: NodeContext) -> None:
        self._dispatch(ctx, self.engine.start(ctx.now))

    def on_deliver(self, ctx: NodeContext, src: str, message) -> None:
        self._dispatch(ctx, self.engine.on_message(ctx.now, message))

    def on_timer(self, ctx: NodeContext, timer_id) -> None:
        self._dispatch(ctx, self.engine.on_timeout(ctx.now, timer_id))

    def submit_tx(self, ctx: NodeContext, tx: Transaction) -> None:
        if self.engine.mempool is not None:
            self.engine.mempool.submit(tx)
            self._dispatch(ctx, self.engine.poke(ctx.now))

    def _dispatch(self, ctx: NodeContext, actions) -> None:
        for action in actions:
            if action[0] == "broadcast":
                message = action[1]
                if self.equivocating and isinstance(message, Proposal):
                    self._equivocate(ctx, message)
                    continue
                for peer in ctx.peers:
                    ctx.send(peer, message)
            elif action[0] == "timer":
                ctx.set_timer(action[1], action[2])
            elif action[0] == "finalized":
                self.chain.append(action[1])
                self.results.append(action[2])

    def _equivocate(self, ctx: NodeContext, proposal: Proposal) -> None:
        keypair = self.engine.keypair
        block = proposal.block
        twin_block = Block(
            replace(block.header, timestamp=block.header.timestamp + 1),
            block.transactions,
        )
        twin = sign_message(
            keypair, Proposal(proposal.height, proposal.round, twin_block, None)
        )
        peers = ctx.peers
        for index, peer in enumerate(peers):
            ctx.send(peer, proposal if index % 2 == 0 else twin)
        # vote for both twins: prepares and ready-made commit seals
        for candidate in (block, twin_block):
            prepare = sign_message(
                keypair,
                Prepare(proposal.height, proposal.round, candidate.hash,
                        self.engine.address, None),
            )
            commit = Commit(
                proposal.height, proposal.round, candidate.hash,
                self.engine.address, sign_digest(keypair, candidate.hash),
            )
            for peer in peers:
                ctx.send(peer, prepare)
                ctx.send(peer, commit)


@dataclass
class Cluster:
    sim: Simulator
    nodes: dict[str, ConsensusNode]
    validator_set: ValidatorSet
    keypairs: dict[str, KeyPair]
    organization: KeyPair
    genesis_state: AidState
    genesis: Block
    byzantine: tuple[str, ...] = ()
    crashed: tuple[str, ...] = ()

    @property
    def honest_live(self) -> list[ConsensusNode]:
        out = []
        for name, node in self.nodes.items():
            if name not in self.byzantine and name not in self.crashed:
                out.append(node)
        return out

    def finalized_by_height(self) -> dict[int, set[bytes]]:
        seen: dict[int, set[bytes]] = {}
        for node in self.honest_live:
            for block in node.chain:
                seen.setdefault(block.header.height, set()).add(block.hash)
        return seen

    def assert_safety(self) -> None:
        for height, hashes in self.finalized_by_height().items():
            if len(hashes) > 1:
                raise AssertionError(
                    f"conflicting finalized blocks at height {height}: "
                    + ", ".join(h.hex()[:12] for h in hashes)
                )

    def min_head_height(self) -> int:
        live = self.honest_live
        return min(node.head_height for node in live) if live else 0

    def total_rounds_entered(self) -> int:
        return max(
            (node.engine.rounds_entered for node in self.honest_live), default=0
        )


def build_cluster(
    n: int = 4,
    *,
    sim_config: SimConfig | None = None,
    engine_config: EngineConfig | None = None,
    byzantine: tuple[int, ...] = (),
    crashed: dict[int, int] | None = None,
    with_mempools: bool = False,
    key_seed: bytes = b"cluster",
) -> Cluster:
    """Wire n validators into a fresh simulator.

    crashed maps validator index to crash time (ms); byzantine lists
    validator indexes to wrap as equivocating proposers.
    """
    keypairs = sorted(
        (KeyPair.from_seed(key_seed + bytes([i])) for i in range(n)),
        key=lambda kp: kp.address,
    )
    vset = ValidatorSet(tuple(kp.address for kp in keypairs))
    organization = KeyPair.from_seed(key_seed + b":org")
    genesis_state = init(organization.address)
    genesis = genesis_block(state_root(genesis_state), timestamp=1_700_000_000)

    sim = Simulator(sim_config or SimConfig())
    nodes: dict[str, ConsensusNode] = {}
    names: dict[str, KeyPair] = {}
    config = engine_config or EngineConfig(produce_empty_blocks=True)
    for index, keypair in enumerate(keypairs):
        name = f"v{index}"
        mempool = ListMempool() if with_mempools else None
        engine = Engine(keypair, vset, genesis, genesis_state, mempool=mempool, config=config)
        node = ConsensusNode(name, engine)
        sim.register(name, node)
        nodes[name] = node
        names[name] = keypair

    byz_names = tuple(f"v{i}" for i in byzantine)
    for name in byz_names:
        sim.inject_fault(("byzantine-equivocate", name))
    crash_names = []
    for index, at_ms in (crashed or {}).items():
        name = f"v{index}"
        sim.inject_fault(("crash", name, at_ms))
        crash_names.append(name)

    return Cluster(
        sim=sim,
        nodes=nodes,
        validator_set=vset,
        keypairs=names,
        organization=organization,
        genesis_state=genesis_state,
        genesis=genesis,
        byzantine=byz_names,
        crashed=tuple(crash_names),
    )
