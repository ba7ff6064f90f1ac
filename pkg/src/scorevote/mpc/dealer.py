"""Trusted triple dealer used as simulation scaffolding.

The dealer is not a protocol party.  It stands in for a preprocessing
phase and hands every tallier its Shamir shares of random multiplication
triples ``(a, b, a*b)``.
"""

from __future__ import annotations

import numpy as np

from ..errors import PreprocessingError
from ..field import PrimeModulus, RandomSource
from ..sharing import shamir_share_array


class TripleDealer:
    def __init__(self, modulus: PrimeModulus, D: int, t: int, rng: RandomSource,
                 limit: int | None = None):
        self.modulus = modulus
        self.D = D
        self.t = t
        self.rng = rng
        self.limit = limit
        self.issued = 0
        self._batches: dict[int, tuple[int, np.ndarray, set[int]]] = {}
        self._next: list[int] = [0] * D

    def fetch(self, index: int, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return tallier ``index``'s (0-based) shares of the next ``n`` triples."""
        k = self._next[index]
        self._next[index] += 1
        batch = self._batches.get(k)
        if batch is None:
            if self.limit is not None and self.issued + n > self.limit:
                raise PreprocessingError(f"dealer exhausted after {self.issued} triples")
            self.issued += n
            f = self.modulus
            a = self.rng.field_array(f, (n,))
            b = self.rng.field_array(f, (n,))
            c = f.mul(a, b)
            points = range(1, self.D + 1)
            shares = np.stack([shamir_share_array(v, self.t, points, f, self.rng) for v in (a, b, c)],
                              axis=1)
            batch = (n, shares, set())
            self._batches[k] = batch
        size, shares, served = batch
        if size != n:
            raise PreprocessingError(f"triple request mismatch: {n} vs {size}")
        served.add(index)
        if len(served) == self.D:
            del self._batches[k]
        mine = shares[index]
        return mine[0], mine[1], mine[2]
