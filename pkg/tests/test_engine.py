"""Scripted engine tests: one engine under test, peers simulated by hand."""

import pytest

from aidchain import ledger
from aidchain.consensus import (
    Commit,
    Engine,
    EngineConfig,
    NotProposerError,
    Prepare,
    Proposal,
    RoundChange,
    ValidatorSet,
    build_block,
    genesis_block,
    sign_message,
)
from aidchain.crypto import KeyPair, sign_digest

KEYPAIRS = sorted((KeyPair.from_seed(b"engine" + bytes([i])) for i in range(4)),
                  key=lambda k: k.address)
VSET = ValidatorSet(tuple(k.address for k in KEYPAIRS))
ORG = KeyPair.from_seed(b"engine-org")
STATE = ledger.init(ORG.address)
GENESIS = genesis_block(ledger.state_root(STATE), 1_700_000_000)

BY_ADDR = {k.address: k for k in KEYPAIRS}


def engine_for(index: int, **config) -> Engine:
    return Engine(KEYPAIRS[index], VSET, GENESIS, STATE,
                  config=EngineConfig(**config))


def proposer_index(height: int, round: int = 0) -> int:
    addr = VSET.proposer_for(height, round)
    return next(i for i, k in enumerate(KEYPAIRS) if k.address == addr)


def make_proposal(height=1, round=0, timestamp=1) -> Proposal:
    proposer = BY_ADDR[VSET.proposer_for(height, round)]
    block, _ = build_block(GENESIS.header, STATE, {}, proposer.address, round, timestamp, [])
    return sign_message(proposer, Proposal(height, round, block, None))


def finalized_in(actions):
    return [a[1] for a in actions if a[0] == "finalized"]


def broadcasts_in(actions, kind=None):
    out = [a[1] for a in actions if a[0] == "broadcast"]
    if kind is not None:
        out = [m for m in out if isinstance(m, kind)]
    return out


class TestHappyPath:
    def test_proposal_prepares_commits_finalize(self):
        follower = proposer_index(1)  # ensure engine under test is not proposer
        engine = engine_for((follower + 1) % 4)
        engine.start(0)
        proposal = make_proposal()
        actions = engine.on_message(10, proposal)
        prepares = broadcasts_in(actions, Prepare)
        assert len(prepares) == 1 and prepares[0].block_hash == proposal.block.hash

        block_id = proposal.block.hash
        others = [k for k in KEYPAIRS if k.address != engine.address]
        actions = []
        for k in others[:2]:
            msg = sign_message(k, Prepare(1, 0, block_id, k.address, None))
            actions += engine.on_message(20, msg)
        commits = broadcasts_in(actions, Commit)
        assert len(commits) == 1  # quorum of 3 prepares incl. our own

        actions = []
        for k in others[:2]:
            commit = Commit(1, 0, block_id, k.address, sign_digest(k, block_id))
            actions += engine.on_message(30, commit)
        done = finalized_in(actions)
        assert len(done) == 1
        assert done[0].hash == block_id
        assert len(done[0].commit_seals) >= VSET.quorum
        assert engine.head_height == 1
        assert engine.height == 2

    def test_empty_block_state_root_equals_parent(self):
        proposal = make_proposal()
        assert proposal.block.header.state_root == GENESIS.header.state_root
        assert proposal.block.transactions == ()


class TestProposeGuards:
    def test_non_proposer_raises(self):
        index = (proposer_index(1) + 1) % 4
        engine = engine_for(index)
        engine.start(0)
        with pytest.raises(NotProposerError):
            engine.propose(0)

    def test_proposer_builds_valid_block(self):
        engine = engine_for(proposer_index(1))
        engine.start(0)
        actions = engine.propose(5)
        proposals = broadcasts_in(actions, Proposal)
        assert len(proposals) == 1
        from aidchain.consensus import validate_block

        ok, reason, _ = validate_block(
            proposals[0].block, GENESIS.header, STATE, {}, VSET)
        assert ok, reason

    def test_propose_idempotent_per_round(self):
        engine = engine_for(proposer_index(1))
        engine.start(0)
        engine.propose(5)
        assert engine.propose(6) == []


class TestVoteAccounting:
    def test_duplicate_prepare_counted_once(self):
        engine = engine_for((proposer_index(1) + 1) % 4)
        engine.start(0)
        proposal = make_proposal()
        engine.on_message(10, proposal)
        block_id = proposal.block.hash
        other = next(k for k in KEYPAIRS if k.address != engine.address)
        msg = sign_message(other, Prepare(1, 0, block_id, other.address, None))
        actions = engine.on_message(20, msg)
        actions += engine.on_message(21, msg)  # replayed verbatim
        assert broadcasts_in(actions, Commit) == []  # still only 2 distinct prepares
        assert len(engine.prepares[(0, block_id)]) == 2

    def test_invalid_signature_dropped_with_metric(self):
        engine = engine_for(0)
        engine.start(0)
        other = KEYPAIRS[1]
        msg = sign_message(other, Prepare(1, 0, b"\x55" * 32, other.address, None))
        forged = Prepare(1, 0, b"\x66" * 32, msg.signer, msg.signature)
        before = engine.metrics["dropped_invalid"]
        engine.on_message(5, forged)
        assert engine.metrics["dropped_invalid"] == before + 1

    def test_future_height_buffered_and_replayed(self):
        engine = engine_for((proposer_index(1) + 1) % 4)
        engine.start(0)
        # full consensus for height 2 arrives before height 1 resolves
        p1 = make_proposal(height=1)
        parent = p1.block
        proposer2 = BY_ADDR[VSET.proposer_for(2, 0)]
        block2, _ = build_block(parent.header, STATE, {}, proposer2.address, 0, 2, [])
        p2 = sign_message(proposer2, Proposal(2, 0, block2, None))
        engine.on_message(5, p2)
        assert engine.metrics["buffered_future"] == 1

        votes = []
        for k in KEYPAIRS:
            votes.append(sign_message(k, Prepare(2, 0, block2.hash, k.address, None)))
            votes.append(Commit(2, 0, block2.hash, k.address, sign_digest(k, block2.hash)))
        for v in votes:
            engine.on_message(6, v)

        # now resolve height 1; the buffered height-2 traffic finalizes it too
        actions = engine.on_message(10, p1)
        for k in KEYPAIRS:
            if k.address == engine.address:
                continue
            actions += engine.on_message(11, sign_message(
                k, Prepare(1, 0, parent.hash, k.address, None)))
            actions += engine.on_message(12, Commit(
                1, 0, parent.hash, k.address, sign_digest(k, parent.hash)))
        heights = [b.header.height for b in finalized_in(actions)]
        assert heights == [1, 2]


class TestTimeoutsAndRounds:
    def test_timeout_doubling_sequence(self):
        engine = engine_for(0)
        assert [engine.timeout_duration(r) for r in (0, 1, 2)] == [500, 1000, 2000]
        assert engine.timeout_duration(10) == 30_000  # capped

    def test_timer_fires_round_change_broadcast(self):
        engine = engine_for((proposer_index(1) + 1) % 4, produce_empty_blocks=True)
        actions = engine.start(0)
        timer_seq = next(a[1] for a in actions if a[0] == "timer" and a[1] == engine._round_timer)
        actions = engine.on_timeout(2000, timer_seq)
        changes = broadcasts_in(actions, RoundChange)
        assert len(changes) == 1 and changes[0].new_round == 1
        assert engine.round == 1

    def test_stale_timer_ignored_after_finalization(self):
        engine = engine_for((proposer_index(1) + 1) % 4)
        engine.start(0)
        proposal = make_proposal()
        actions = engine.on_message(10, proposal)
        timer_seq = engine._round_timer
        block_id = proposal.block.hash
        for k in KEYPAIRS:
            if k.address == engine.address:
                continue
            engine.on_message(11, sign_message(k, Prepare(1, 0, block_id, k.address, None)))
            engine.on_message(12, Commit(1, 0, block_id, k.address, sign_digest(k, block_id)))
        assert engine.head_height == 1
        assert engine.on_timeout(99_999, timer_seq) == []  # must not round-change height 2
        assert engine.round == 0

    def test_round_change_quorum_lets_new_proposer_propose(self):
        # proposer for (1, 1) is the engine under test
        index = proposer_index(1, round=1)
        engine = engine_for(index)
        engine.start(0)
        actions = []
        for k in KEYPAIRS:
            if k.address == engine.address:
                continue
            msg = sign_message(k, RoundChange(1, 1, k.address, None))
            actions += engine.on_message(50, msg)
        assert engine.round == 1
        proposals = broadcasts_in(actions, Proposal)
        assert len(proposals) == 1 and proposals[0].round == 1

    def test_lock_sticks_across_rounds(self):
        # pick a validator that proposes in neither round 0 nor round 1
        engine = engine_for((proposer_index(1) + 2) % 4)
        engine.start(0)
        proposal = make_proposal()
        block_id = proposal.block.hash
        engine.on_message(10, proposal)
        others = [k for k in KEYPAIRS if k.address != engine.address]
        for k in others[:2]:
            engine.on_message(20, sign_message(k, Prepare(1, 0, block_id, k.address, None)))
        assert engine.locked_hash == block_id  # committed, hence locked
        # move to round 1 and offer a different block: no prepare for it
        for k in others:
            engine.on_message(30, sign_message(k, RoundChange(1, 1, k.address, None)))
        assert engine.round == 1
        rival = make_proposal(round=1, timestamp=999)
        actions = engine.on_message(40, rival)
        assert broadcasts_in(actions, Prepare) == []
        assert engine.metrics["proposal_vs_lock"] == 1
        # but a quorum of commits for the rival still finalizes it
        actions = []
        for k in others:
            actions += engine.on_message(
                50, Commit(1, 1, rival.block.hash, k.address,
                           sign_digest(k, rival.block.hash)))
        done = finalized_in(actions)
        assert len(done) == 1 and done[0].hash == rival.block.hash
