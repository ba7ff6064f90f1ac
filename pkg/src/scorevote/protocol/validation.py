"""Checking ballot legality on threshold-shared ballots.

Every rule reduces to "entries lie in ``{0, ..., c-1}``" (a product chain
that must vanish) plus a condition on the entry sum; Borda additionally
needs pairwise-distinct entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mpc.comparison import less_than
from ..mpc.engine import Engine, SharedValue
from ..rules import ElectionConfig, Rule


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str | None = None


def chain_length(config: ElectionConfig) -> int:
    if config.rule is Rule.RANGE:
        return config.L + 1
    if config.rule is Rule.BORDA:
        return config.M
    return 2


def expected_sum(config: ElectionConfig) -> int | None:
    M = config.M
    return {
        Rule.PLURALITY: 1,
        Rule.VETO: M - 1,
        Rule.BORDA: M * (M - 1) // 2,
    }.get(config.rule)


def zero_test_repeats(p: int) -> int:
    # a single batched test errs with probability 1/p; repeat for small fields
    return 2 if p.bit_length() <= 16 else 1


async def distinctness(eng: Engine, X: SharedValue) -> np.ndarray:
    """Per row: whether all entries differ, via a masked product of differences."""
    V, M = X.shape
    if M < 2:
        return np.ones(V, dtype=bool)
    pairs = [(a, b) for a in range(M) for b in range(a + 1, M)]
    diffs = np.stack([eng.modulus.sub(X.share[:, a], X.share[:, b]) for a, b in pairs])
    product = await eng.prod(SharedValue(diffs, eng), "distinct")
    mask = await eng.rand_nonzero((V,))
    masked = await eng.mul(product, mask, "distinct-mask")
    opened = await eng.open(masked, "validation", "distinct")
    return opened != 0


async def validate_ballots(eng: Engine, config: ElectionConfig, X: SharedValue,
                           repeats: int | None = None) -> list[Verdict]:
    """Verdicts for the ``(V, M)`` shared ballot matrix ``X``."""
    V = X.shape[0]
    if V == 0:
        return []
    repeats = zero_test_repeats(config.p) if repeats is None else repeats
    chain = await eng.product_chain(X, chain_length(config))
    entries_ok = np.asarray(await eng.zero_test(chain, repeats, "entries"), dtype=bool).reshape(V)
    reasons: list[str | None] = [None if ok else "entry outside allowed range" for ok in entries_ok]

    sums = X.sum(axis=1)
    target = expected_sum(config)
    if target is not None:
        opened = await eng.open(sums, "validation", "sum")
        for v in range(V):
            if reasons[v] is None and opened[v] != target:
                reasons[v] = f"entries do not sum to {target}"

    if config.rule is Rule.APPROVAL:
        idx = np.nonzero(entries_ok)[0]
        if len(idx):
            bound = eng.constant(config.K + 1, (len(idx),))
            within = await eng.open(await less_than(eng, sums[idx], bound), "validation", "approval-count")
            for v, bit in zip(idx, within):
                if reasons[v] is None and bit != 1:
                    reasons[v] = f"more than K={config.K} approvals"

    if config.rule is Rule.BORDA:
        distinct = await distinctness(eng, X)
        for v in range(V):
            if reasons[v] is None and not distinct[v]:
                reasons[v] = "repeated entries"

    return [Verdict(r is None, r) for r in reasons]
