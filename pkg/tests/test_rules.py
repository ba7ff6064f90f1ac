import itertools
import random

import pytest

from scorevote.errors import ChoiceError, ConfigError, IllegalBallot
from scorevote.gen import random_choice
from scorevote.rules import (
    Ballot, ElectionConfig, Rule, is_legal, legality_reason, make_ballot, plaintext_tally,
    plaintext_winners, score_bound,
)


def cfg(rule, **kw):
    kw.setdefault("N", 10)
    kw.setdefault("M", 4)
    return ElectionConfig(rule, **kw)


def test_make_ballot_templates():
    assert make_ballot(cfg("plurality"), 2).scores == (0, 0, 1, 0)
    assert make_ballot(cfg("veto", M=3), 0).scores == (0, 1, 1)
    assert make_ballot(cfg("borda", M=3), [2, 0, 1]).scores == (1, 0, 2)
    assert make_ballot(cfg("approval", K=2), {0, 3}).scores == (1, 0, 0, 1)
    assert make_ballot(cfg("range", L=5), [5, 0, 3, 1]).scores == (5, 0, 3, 1)


@pytest.mark.parametrize("rule,choice", [
    ("plurality", 4), ("plurality", -1), ("veto", "x"), ("range", [6, 0, 0, 0]),
    ("range", [1, 1]), ("approval", {0, 1}), ("borda", [0, 0, 1, 2]), ("borda", [0, 1, 2]),
])
def test_make_ballot_rejects_malformed(rule, choice):
    with pytest.raises(ChoiceError):
        make_ballot(cfg(rule, L=5, K=1), choice)


def test_legality_examples():
    p = cfg("plurality")
    assert is_legal(p, (0, 1, 0, 0))
    assert not is_legal(p, (0, 2, 0, 0))
    assert not is_legal(p, (0, 10, 0, 0))
    assert not is_legal(p, (0, 0, 0, 0))
    b = cfg("borda", M=3)
    assert is_legal(b, (1, 0, 2))
    assert not is_legal(b, (1, 1, 2))
    assert not is_legal(b, (0, 1, 3))
    a = cfg("approval", K=2)
    assert is_legal(a, (0, 0, 0, 0)) and is_legal(a, (1, 0, 1, 0))
    assert not is_legal(a, (1, 1, 1, 0))
    assert is_legal(cfg("range", L=2), (0, 0, 0, 0))
    assert not is_legal(cfg("range", L=2), (0, 3, 0, 0))
    v = cfg("veto")
    assert is_legal(v, (1, 1, 0, 1)) and not is_legal(v, (1, 1, 1, 1))
    assert legality_reason(p, (1, 0)) is not None
    assert legality_reason(p, (-1, 1, 1, 0)) == "negative entry"


@pytest.mark.parametrize("rule", list(Rule))
def test_random_choices_are_legal(rule):
    c = cfg(rule, M=6, K=3, L=4)
    rnd = random.Random(rule.value)
    for _ in range(1000):
        assert is_legal(c, make_ballot(c, random_choice(c, rnd)))


def test_tally_examples():
    c = cfg("plurality", M=3)
    ballots = [make_ballot(c, 0), make_ballot(c, 0), make_ballot(c, 1)]
    assert plaintext_tally(c, ballots) == [2, 1, 0]
    r = cfg("range", L=3)
    assert plaintext_tally(r, [Ballot(i, (0, 0, 0, 0)) for i in range(5)]) == [0, 0, 0, 0]
    with pytest.raises(IllegalBallot) as exc:
        plaintext_tally(c, [Ballot("bad", (2, 0, 0))])
    assert exc.value.voter_tag == "bad"


def test_borda_total():
    c = cfg("borda", N=200, M=5)
    rnd = random.Random(1)
    ballots = [make_ballot(c, rnd.sample(range(5), 5)) for _ in range(200)]
    w = plaintext_tally(c, ballots)
    assert sum(w) == 200 * 10
    assert max(w) <= c.bound


def test_winners():
    assert plaintext_winners([2, 1, 0], 1) == [0]
    assert plaintext_winners([3, 3, 1], 1) == [0]
    assert plaintext_winners([1, 4, 4, 2], 2) == [1, 2]


def test_winners_against_brute_force():
    rnd = random.Random(2)
    for _ in range(500):
        M = rnd.randint(2, 6)
        w = [rnd.randint(0, 4) for _ in range(M)]
        K = rnd.randint(1, M)
        best = max(itertools.permutations(range(M), K),
                   key=lambda seq: ([w[m] for m in seq], [-m for m in seq]))
        assert plaintext_winners(w, K) == list(best)


def test_veto_winner_has_fewest_vetoes():
    rnd = random.Random(3)
    for _ in range(500):
        M = rnd.randint(2, 6)
        c = cfg("veto", N=20, M=M)
        vetoes = [rnd.randrange(M) for _ in range(20)]
        w = plaintext_tally(c, [make_ballot(c, v) for v in vetoes])
        counts = [vetoes.count(m) for m in range(M)]
        assert plaintext_winners(w, 1) == [counts.index(min(counts))]


def test_bounds():
    assert score_bound(Rule.PLURALITY, 10, 4) == 10
    assert score_bound(Rule.BORDA, 10, 4) == 40
    assert score_bound(Rule.RANGE, 10, 4, 5) == 50


def test_config_validation():
    with pytest.raises(ConfigError, match="modulus too small for bound B"):
        ElectionConfig("plurality", N=9000, M=3, modulus="p13")
    with pytest.raises(ConfigError, match="B < p/2"):
        ElectionConfig("plurality", N=5000, M=3, modulus="p13")
    with pytest.raises(ConfigError):
        ElectionConfig("plurality", N=3, M=1)
    with pytest.raises(ConfigError):
        ElectionConfig("plurality", N=3, M=3, K=4)
    with pytest.raises(ConfigError):
        ElectionConfig("range", N=3, M=3)
    with pytest.raises(ConfigError):
        ElectionConfig("plurality", N=3, M=3, D=1)
    with pytest.raises(ConfigError):
        ElectionConfig("plurality", N=3, M=3, D=3, threshold=2)
    with pytest.raises(ConfigError):
        ElectionConfig("plurality", N=1, M=7, modulus=7)
    with pytest.raises(ConfigError):
        ElectionConfig("stv", N=3, M=3)
    with pytest.raises(ConfigError):
        ElectionConfig("plurality", N=3, M=2, candidate_names=("a", "a"))


def test_candidates_sorted_lexicographically():
    c = ElectionConfig("plurality", N=3, M=3, candidate_names=("carol", "alice", "bob"))
    assert c.candidate_names == ("alice", "bob", "carol")
    assert ElectionConfig("plurality", N=3, M=12).candidate_names[:3] == ("C01", "C02", "C03")
