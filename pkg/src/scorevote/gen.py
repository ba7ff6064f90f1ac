"""Synthetic electorates, optionally salted with illegal ballots."""

from __future__ import annotations

import random

from .rules import Ballot, ElectionConfig, Rule, make_ballot


def random_choice(config: ElectionConfig, rnd: random.Random):
    M = config.M
    rule = config.rule
    if rule in (Rule.PLURALITY, Rule.VETO):
        return rnd.randrange(M)
    if rule is Rule.RANGE:
        return [rnd.randint(0, config.L) for _ in range(M)]
    if rule is Rule.APPROVAL:
        return set(rnd.sample(range(M), rnd.randint(0, config.K)))
    return rnd.sample(range(M), M)


def illegal_scores(config: ElectionConfig, rnd: random.Random) -> tuple[int, ...]:
    """One illegal ballot of the rule's documented cheating shape.

    Plurality: ``N * e_m`` (max(N, 2) votes for one candidate).
    Range: a legal vector with one entry raised to ``L + 1``.
    Approval: ``K + 1`` approvals, or a 2 when ``K = M``.
    Veto: no veto at all (all ones).
    Borda: a permutation with one score duplicated.
    """
    M, rule = config.M, config.rule
    if rule is Rule.PLURALITY:
        scores = [0] * M
        scores[rnd.randrange(M)] = max(config.N, 2)
    elif rule is Rule.RANGE:
        scores = [rnd.randint(0, config.L) for _ in range(M)]
        scores[rnd.randrange(M)] = config.L + 1
    elif rule is Rule.APPROVAL:
        scores = [0] * M
        if config.K < M:
            for m in rnd.sample(range(M), config.K + 1):
                scores[m] = 1
        else:
            scores[rnd.randrange(M)] = 2
    elif rule is Rule.VETO:
        scores = [1] * M
    else:
        scores = list(make_ballot(config, rnd.sample(range(M), M)).scores)
        a, b = rnd.sample(range(M), 2)
        scores[a] = scores[b]
    return tuple(scores)


def generate_ballots(config: ElectionConfig, seed: int = 0, adversarial: float = 0.0,
                     n: int | None = None) -> list[Ballot]:
    """``n`` (default ``config.N``) ballots; exactly ``round(adversarial * n)`` are illegal."""
    if not 0.0 <= adversarial <= 1.0:
        raise ValueError("adversarial fraction must lie in [0, 1]")
    n = config.N if n is None else n
    rnd = random.Random(seed)
    bad = set(rnd.sample(range(n), round(adversarial * n)))
    width = len(str(max(n, 1)))
    out = []
    for i in range(n):
        tag = f"v{i + 1:0{width}d}"
        if i in bad:
            out.append(Ballot(tag, illegal_scores(config, rnd)))
        else:
            out.append(make_ballot(config, random_choice(config, rnd), tag))
    return out
