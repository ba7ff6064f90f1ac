import asyncio
import random

import numpy as np
import pytest

from scorevote.errors import AbortError, ChannelError, ChoiceError, ConfigError, EmptyElection, SubmitTimeout
from scorevote.field import RandomSource
from scorevote.gen import generate_ballots, illegal_scores, random_choice
from scorevote.mpc.dealer import TripleDealer
from scorevote.mpc.engine import Engine
from scorevote.net.transport import MemoryNetwork, flip_bit
from scorevote.net.wire import KeyRing, Kind
from scorevote.protocol import (
    Faults, Receipt, Tallier, audit_disclosures, reshare_to_threshold, run_election, select_top_k,
    validate_ballots, voter_submit,
)
from scorevote.rules import Ballot, ElectionConfig, Rule, make_ballot, plaintext_tally, plaintext_winners

from conftest import run_mpc

SESSION = b"e" * 16


def build(config, voters, tamper=None, seed=0):
    """Talliers on an in-memory network, plus voter endpoints keyed by tag."""
    D = config.D
    net = MemoryNetwork(SESSION, KeyRing(b"m" * 32), config.modulus, tamper=tamper)
    roll = {D + 1 + i: tag for i, tag in enumerate(voters)}
    dealer = TripleDealer(config.modulus, D, config.threshold, RandomSource(seed))
    rngs = RandomSource(seed + 1).spawn(D)
    talliers = [Tallier(Engine(d, D, config.threshold, config.modulus, net.endpoint(d), rngs[d - 1],
                               dealer, session=SESSION, timeout=5), config, roll)
                for d in range(1, D + 1)]
    endpoints = {tag: net.endpoint(p) for p, tag in roll.items()}
    return net, talliers, endpoints


def held_ballot(talliers, voter_party, f):
    return list(f.sum(np.stack([t.received[voter_party][1] for t in talliers]), axis=0))


PLUR = ElectionConfig("plurality", N=5, M=3, D=3)


def test_submit_confirms_each_tallier():
    async def scenario():
        net, talliers, eps = build(PLUR, ["a"])
        servers = [asyncio.create_task(t.serve()) for t in talliers]
        conf = await voter_submit(PLUR, make_ballot(PLUR, 1, "a"), RandomSource(1), eps["a"])
        for t in talliers:
            t.close_window()
        await asyncio.gather(*servers)
        return conf, talliers

    conf, talliers = asyncio.run(scenario())
    assert conf.confirmed and sorted(conf.receipts) == [1, 2, 3] and conf.attempts == 1
    assert all(len(t.received) == 1 for t in talliers)
    assert held_ballot(talliers, 4, PLUR.modulus) == [0, 1, 0]


def test_duplicate_submission_keeps_first():
    async def scenario():
        net, talliers, eps = build(PLUR, ["a"])
        servers = [asyncio.create_task(t.serve()) for t in talliers]
        first = await voter_submit(PLUR, make_ballot(PLUR, 2, "a"), RandomSource(1), eps["a"])
        again = await voter_submit(PLUR, make_ballot(PLUR, 2, "a"), RandomSource(9), eps["a"],
                                   nonce=first.nonce)
        second = await voter_submit(PLUR, make_ballot(PLUR, 0, "a"), RandomSource(2), eps["a"])
        for t in talliers:
            t.close_window()
        await asyncio.gather(*servers)
        return first, again, second, talliers

    first, again, second, talliers = asyncio.run(scenario())
    assert first.confirmed and again.confirmed
    assert set(second.receipts.values()) == {Receipt.DUPLICATE}
    assert held_ballot(talliers, 4, PLUR.modulus) == [0, 0, 1]
    assert all(t.duplicates == 1 for t in talliers)


def test_tampered_share_is_resent():
    flipped = []

    def tamper(src, dst, msg, frame):
        if msg.kind == Kind.SHARE and dst == 2 and not flipped:
            flipped.append(msg.round)
            return flip_bit(frame)
        return None

    async def scenario():
        net, talliers, eps = build(PLUR, ["a"], tamper=tamper)
        servers = [asyncio.create_task(t.serve()) for t in talliers]
        conf = await voter_submit(PLUR, make_ballot(PLUR, 0, "a"), RandomSource(1), eps["a"], timeout=0.05)
        for t in talliers:
            t.close_window()
        await asyncio.gather(*servers)
        return conf, talliers

    conf, talliers = asyncio.run(scenario())
    assert flipped and conf.confirmed and conf.attempts == 2
    assert talliers[1].engine.net.rejected_frames == 1
    assert held_ballot(talliers, 4, PLUR.modulus) == [1, 0, 0]


def test_forged_confirmations_raise_channel_error():
    def tamper(src, dst, msg, frame):
        return flip_bit(frame, len(frame) - 1) if msg.kind == Kind.ACK and src == 1 else None

    async def scenario():
        net, talliers, eps = build(PLUR, ["a"], tamper=tamper)
        servers = [asyncio.create_task(t.serve()) for t in talliers]
        try:
            await voter_submit(PLUR, make_ballot(PLUR, 0, "a"), RandomSource(1), eps["a"],
                               retries=1, timeout=0.02)
        finally:
            for t in talliers:
                t.close_window()
            await asyncio.gather(*servers)

    with pytest.raises(ChannelError):
        asyncio.run(scenario())


def test_unreachable_tallier_times_out():
    async def scenario():
        net, talliers, eps = build(PLUR, ["a"])
        net.crash(3)
        servers = [asyncio.create_task(t.serve()) for t in talliers[:2]]
        try:
            await voter_submit(PLUR, make_ballot(PLUR, 0, "a"), RandomSource(1), eps["a"],
                               retries=1, timeout=0.02)
        finally:
            for t in talliers:
                t.close_window()
            await asyncio.gather(*servers)

    with pytest.raises(SubmitTimeout) as exc:
        asyncio.run(scenario())
    assert exc.value.phase == "submit"


def test_honest_client_refuses_illegal_ballot():
    async def scenario():
        _, _, eps = build(PLUR, ["a"])
        await voter_submit(PLUR, Ballot("a", (2, 0, 0)), RandomSource(1), eps["a"])

    with pytest.raises(ChoiceError):
        asyncio.run(scenario())


def _tally_shares(config, ballots, seed=0):
    """Per-tallier additive aggregates from freshly shared ballots."""
    from scorevote.sharing import additive_share_array
    rng = RandomSource(seed)
    shares = [additive_share_array(np.array(b.scores), config.D, config.modulus, rng) for b in ballots]
    return [config.modulus.sum(np.stack([s[d] for s in shares]), axis=0) for d in range(config.D)]


def test_aggregate_identity():
    c = ElectionConfig("borda", N=50, M=6, D=5)
    ballots = generate_ballots(c, 4)
    agg = _tally_shares(c, ballots)
    assert list(c.modulus.sum(np.stack(agg), axis=0)) == plaintext_tally(c, ballots)
    one = ballots[:1]
    assert list(c.modulus.sum(np.stack(_tally_shares(c, one)), axis=0)) == list(one[0].scores)


def test_reshare_and_select():
    rnd = random.Random(0)
    for K in (1, 2, 3):
        for _ in range(10):
            c = ElectionConfig("range", N=20, M=5, K=K, L=4, modulus="p13")
            ballots = [make_ballot(c, random_choice(c, rnd), i) for i in range(20)]
            agg = _tally_shares(c, ballots, rnd.randrange(100))

            async def fn(e):
                w = await reshare_to_threshold(e, agg[e.index])
                return await e.open(w), await select_top_k(e, w, c.K)

            res, _ = run_mpc(fn, D=3, modulus=c.modulus, seed=rnd.randrange(100))
            w, winners = res[0]
            tally = plaintext_tally(c, ballots)
            assert list(w) == tally
            assert winners == plaintext_winners(tally, K)


@pytest.mark.parametrize("w,K,expected", [((2, 1, 0), 1, [0]), ((3, 3, 1), 1, [0]),
                                          ((1, 4, 4, 2), 2, [1, 2]), ((5, 5, 5), 3, [0, 1, 2])])
def test_select_examples(w, K, expected):
    async def fn(e):
        shared = await e.input(np.array(w), 1, (len(w),))
        out = await select_top_k(e, shared, K)
        opens = [d for d in e.transcript.disclosures if d.category == "comparison"]
        return out, len(opens)

    res, _ = run_mpc(fn)
    M = len(w)
    assert res[0] == (expected, K * (2 * M - K - 1) // 2)


def _validate(config, rows, D=3, seed=0):
    async def fn(e):
        X = await e.input(np.array(rows) % config.p, 1, (len(rows), config.M))
        return await validate_ballots(e, config, X)

    res, engines = run_mpc(fn, D=D, modulus=config.modulus, seed=seed)
    return res[0], engines


def test_validation_examples():
    c = ElectionConfig("plurality", N=10, M=4, modulus="p13")
    verdicts, _ = _validate(c, [[0, 1, 0, 0], [0, 10, 0, 0], [0, 0, 0, 0], [1, 1, 0, 0]])
    assert [v.accepted for v in verdicts] == [True, False, False, False]
    assert verdicts[1].reason == "entry outside allowed range"
    b = ElectionConfig("borda", N=10, M=3)
    verdicts, _ = _validate(b, [[1, 0, 2], [1, 1, 2], [0, 1, 3]])
    assert [v.accepted for v in verdicts] == [True, False, False]
    assert verdicts[1].reason in ("repeated entries", "entries do not sum to 3")
    # (2, 2, 2) passes range and sum checks; only distinctness catches it
    verdicts, _ = _validate(ElectionConfig("borda", N=10, M=4), [[3, 0, 0, 3], [2, 2, 1, 1]])
    assert [v.reason for v in verdicts] == ["repeated entries", "repeated entries"]


@pytest.mark.parametrize("rule", list(Rule))
def test_validation_per_rule(rule):
    c = ElectionConfig(rule, N=20, M=5, K=2, L=3, modulus="p13")
    rnd = random.Random(rule.value)
    legal = [make_ballot(c, random_choice(c, rnd)).scores for _ in range(40)]
    bad = [illegal_scores(c, rnd) for _ in range(40)]
    verdicts, _ = _validate(c, legal + bad)
    assert all(v.accepted for v in verdicts[:40])
    assert not any(v.accepted for v in verdicts[40:])


def test_validation_approval_count():
    c = ElectionConfig("approval", N=5, M=4, K=2)
    verdicts, _ = _validate(c, [[1, 1, 0, 0], [1, 1, 1, 0], [0, 0, 0, 0], [1, 1, 1, 1]])
    assert [v.accepted for v in verdicts] == [True, False, True, False]
    assert verdicts[1].reason == "more than K=2 approvals"


def test_validation_uses_one_multiplication_layer_for_plurality():
    c = ElectionConfig("plurality", N=10, M=10, modulus="p13")
    rows = np.eye(10, dtype=int)[np.arange(100) % 10]

    async def fn(e):
        X = await e.input(rows, 1, rows.shape)
        before = e.snapshot()["online"]
        await validate_ballots(e, c, X)
        return e.stats["online"] - before

    res, _ = run_mpc(fn, modulus=c.modulus)
    assert (res[0].mult_gates, res[0].mult_rounds) == (1000, 1)


def test_run_election_small():
    c = ElectionConfig("plurality", N=3, M=3, K=1, D=3)
    ballots = [make_ballot(c, 0, "a"), make_ballot(c, 0, "b"), make_ballot(c, 1, "c")]
    r = run_election(c, ballots, seed=1)
    assert r.winners == [0] and r.winner_names == ["C1"]
    assert r.accepted == ["a", "b", "c"] and not r.rejected
    assert all(v.confirmation.confirmed for v in r.voters.values())
    assert not audit_disclosures(r.transcripts)


def test_run_election_rejects_with_evidence():
    c = ElectionConfig("borda", N=50, M=8, K=3, modulus="p13")
    ballots = generate_ballots(c, 5)
    ballots[17] = Ballot(ballots[17].voter_tag, (1, 1, 2, 3, 4, 5, 6, 6))
    r = run_election(c, ballots, seed=3)
    tag = ballots[17].voter_tag
    assert r.rejected == [tag]
    assert r.voters[tag].evidence == (1, 1, 2, 3, 4, 5, 6, 6)
    honest = [b for b in ballots if b.voter_tag != tag]
    assert r.winners == plaintext_winners(plaintext_tally(c, honest), 3)
    for tr in r.transcripts:
        assert tr.evidence == [(tag, (1, 1, 2, 3, 4, 5, 6, 6))]
    assert f"rejected {tag}: repeated entries" in r.summary()


def test_negative_entries_recovered_as_signed():
    c = ElectionConfig("range", N=5, M=3, L=2)
    r = run_election(c, [Ballot("x", (-1, 2, 2)), Ballot("y", (1, 1, 1))], seed=0)
    assert r.voters["x"].evidence == (-1, 2, 2)
    assert r.winners == [0]


def test_duplicate_in_election_keeps_first():
    c = ElectionConfig("plurality", N=3, M=3)
    ballots = [Ballot("a", (0, 0, 1)), Ballot("a", (1, 0, 0)), Ballot("b", (0, 1, 0))]
    r = run_election(c, ballots, seed=2)
    assert r.winners == [1] or r.winners == [2]
    assert r.winners == plaintext_winners([0, 1, 1], 1)
    assert r.voters["a"].confirmation.confirmed


def test_empty_election():
    c = ElectionConfig("plurality", N=3, M=3)
    with pytest.raises(EmptyElection) as exc:
        run_election(c, [], seed=0)
    assert exc.value.phase == "aggregate"
    with pytest.raises(EmptyElection):
        run_election(c, [Ballot("a", (1, 1, 0))], seed=0)


def test_crashed_tallier_aborts_with_phase():
    c = ElectionConfig("plurality", N=3, M=3, D=3)
    ballots = generate_ballots(c, 0)
    with pytest.raises(AbortError) as exc:
        run_election(c, ballots, seed=0, faults=Faults(crash_tallier=2))
    assert exc.value.phase == "reconcile"
    assert str(exc.value).startswith("[reconcile]")


def test_tampering_during_election_is_recovered():
    count = [0]

    def tamper(src, dst, msg, frame):
        if msg.kind == Kind.SHARE and count[0] < 3:
            count[0] += 1
            return flip_bit(frame)
        return None

    c = ElectionConfig("veto", N=6, M=3)
    ballots = generate_ballots(c, 1)
    r = run_election(c, ballots, seed=0, faults=Faults(tamper=tamper, ack_timeout=0.05))
    assert r.winners == plaintext_winners(plaintext_tally(c, ballots), 1)
    assert len(r.accepted) == 6


def test_input_checks():
    c = ElectionConfig("plurality", N=1, M=3)
    with pytest.raises(ConfigError):
        run_election(c, [make_ballot(c, 0, "a"), make_ballot(c, 0, "b")])
    with pytest.raises(ConfigError):
        run_election(c, [Ballot("a", (1, 0))])
    with pytest.raises(ConfigError):
        run_election(c, [make_ballot(c, 0, "a")], mode="carrier-pigeon")


def test_network_mode_matches_simulation():
    c = ElectionConfig("approval", N=12, M=4, K=2, D=3)
    ballots = generate_ballots(c, 2, 0.25)
    sim = run_election(c, ballots, seed=4)
    tcp = run_election(c, ballots, mode="network", seed=4)
    assert sim.winners == tcp.winners
    assert sim.rejected == tcp.rejected
    assert sim.transcript_text() == tcp.transcript_text()


def test_determinism():
    c = ElectionConfig("range", N=15, M=5, K=2, L=3, D=5)
    ballots = generate_ballots(c, 9, 0.2)
    a = run_election(c, ballots, seed=11)
    b = run_election(c, ballots, seed=11)
    assert a.transcript_text() == b.transcript_text() and a.report() == b.report()
    assert run_election(c, ballots, seed=12).transcript_text() != a.transcript_text()


def test_disclosure_audit_flags_bad_openings():
    from scorevote.mpc.stats import Disclosure, Transcript
    tr = Transcript(1)
    tr.disclose(Disclosure(0, "comparison", "w0<w1", (5,)))
    tr.disclosures.append(Disclosure(1, "tally", "w", (3, 4)))
    assert len(audit_disclosures([tr])) == 2


def test_tallier_views_hold_no_plaintext_ballots():
    """Structural secrecy check over a full election.

    Voter traffic reaching a tallier is a single SHARE per voter; validation
    openings of legal ballots are constants or random combinations; nothing
    is opened as an output.
    """
    c = ElectionConfig("plurality", N=30, M=4, K=2)
    ballots = generate_ballots(c, 6)
    r = run_election(c, ballots, seed=6)
    for tr in r.transcripts:
        cats = {d.category for d in tr.disclosures}
        assert cats <= {"comparison", "validation"}
        sums = [d for d in tr.disclosures if d.label == "sum"]
        assert all(v == 1 for d in sums for v in d.values)
        assert not tr.evidence
