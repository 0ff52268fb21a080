"""Consensus under the simulator: happy path, crashes, byzantine proposers."""

import pytest

from aidchain import ledger
from aidchain.consensus import verify_seals
from aidchain.netsim import SimConfig, build_cluster
from aidchain.node.tx import build_tx


def test_four_honest_validators_agree():
    cluster = build_cluster(4, sim_config=SimConfig(seed=3, latency_min=5, latency_max=40))
    trace = cluster.sim.run_until(
        lambda s: cluster.min_head_height() >= 8, time_limit_ms=60_000)
    assert trace.predicate_met
    cluster.assert_safety()
    chains = {tuple(b.hash for b in node.chain[:8]) for node in cluster.honest_live}
    assert len(chains) == 1


def test_finalized_blocks_reexecute_to_state_root():
    cluster = build_cluster(4, sim_config=SimConfig(seed=4, latency_min=5, latency_max=30))
    cluster.sim.run_until(lambda s: cluster.min_head_height() >= 5, time_limit_ms=60_000)
    node = cluster.honest_live[0]
    from aidchain.consensus import execute_transactions

    state = cluster.genesis_state
    nonces = {}
    for block in node.chain:
        result = execute_transactions(state, nonces, block.transactions)
        assert ledger.state_root(result.state) == block.header.state_root
        ok, reason = verify_seals(block, cluster.validator_set)
        assert ok, reason
        state, nonces = result.state, result.nonces


def test_crash_fault_liveness():
    # proposer crashed from genesis: remaining three keep finalizing
    cluster = build_cluster(
        4, sim_config=SimConfig(seed=5, latency_min=5, latency_max=40), crashed={1: 0})
    trace = cluster.sim.run_until(
        lambda s: cluster.min_head_height() >= 6, time_limit_ms=120_000)
    assert trace.predicate_met, f"stalled at {cluster.min_head_height()}"
    cluster.assert_safety()


def test_mid_run_crash_recovers():
    cluster = build_cluster(
        4, sim_config=SimConfig(seed=6, latency_min=5, latency_max=40), crashed={0: 4000})
    trace = cluster.sim.run_until(
        lambda s: cluster.min_head_height() >= 8, time_limit_ms=120_000)
    assert trace.predicate_met
    cluster.assert_safety()


def test_crashed_observer_does_not_affect_consensus():
    # a non-validator bystander crashing is invisible to the protocol
    from aidchain.netsim import Simulator

    cluster = build_cluster(4, sim_config=SimConfig(seed=11, latency_min=5, latency_max=20))

    class Observer:
        def start(self, ctx):
            pass

        def on_deliver(self, ctx, src, message):
            pass

        def on_timer(self, ctx, timer_id):
            pass

    cluster.sim.register("observer", Observer())
    cluster.sim.inject_fault(("crash", "observer", 100))
    trace = cluster.sim.run_until(
        lambda s: cluster.min_head_height() >= 5, time_limit_ms=60_000)
    assert trace.predicate_met
    cluster.assert_safety()


@pytest.mark.parametrize("seed", range(4))
def test_byzantine_equivocator_cannot_fork(seed):
    cluster = build_cluster(
        4,
        sim_config=SimConfig(seed=seed, latency_min=5, latency_max=60, drop_rate=0.05),
        byzantine=(0,),
    )
    cluster.sim.run_until(
        lambda s: cluster.total_rounds_entered() >= 30, time_limit_ms=240_000)
    cluster.assert_safety()
    assert cluster.total_rounds_entered() >= 30


def test_transactions_flow_through_simulated_cluster():
    cluster = build_cluster(
        4, sim_config=SimConfig(seed=8, latency_min=5, latency_max=25),
        with_mempools=True)
    org = cluster.organization
    recipient = b"\x42" * 20
    txs = [
        build_tx(org, 0, ledger.AddFunds(1000)),
        build_tx(org, 1, ledger.AddRecipient(recipient)),
        build_tx(org, 2, ledger.SendAllowance(recipient, 250)),
    ]
    sim = cluster.sim
    sim.run_until(time_limit_ms=0)  # start programs
    for name, node in cluster.nodes.items():
        ctx = sim._contexts[name]
        for tx in txs:
            node.submit_tx(ctx, tx)
    trace = sim.run_until(
        lambda s: all(
            ledger.get_balance(n.engine.parent_state, org.address) == 750
            for n in cluster.honest_live),
        time_limit_ms=60_000,
    )
    assert trace.predicate_met
    cluster.assert_safety()
    events = [
        type(e).__name__
        for result in cluster.honest_live[0].results
        for receipt in result.receipts
        for e in receipt.events
    ]
    assert events == ["FundsAdded", "RecipientAdded", "AllowanceSent"]
