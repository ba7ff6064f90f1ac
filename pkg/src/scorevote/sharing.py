"""Additive (all-or-nothing) and Shamir threshold secret sharing.

The dataclass API (:class:`ShareVector`, :class:`ShamirShare`) is what the
voter side and the tests use.  The ``*_array`` helpers operate on stacked
numpy shares, one leading axis entry per party, and back the MPC engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Hashable, Sequence

import numpy as np

from .errors import ConfigError, InsufficientShares, ShareSetError
from .field import FieldElement, PrimeModulus, RandomSource


def default_threshold(D: int) -> int:
    """Largest degree tolerated under an honest majority."""
    return (D - 1) // 2


@dataclass(frozen=True)
class ShareVector:
    tallier: int
    entries: tuple[int, ...]
    voter_tag: Hashable = None

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class ShamirShare:
    point: int
    value: int
    degree: int


# --- additive --------------------------------------------------------------


def additive_share_array(secret: np.ndarray, D: int, modulus: PrimeModulus,
                         rng: RandomSource) -> np.ndarray:
    """Split ``secret`` entrywise into ``D`` additive shares (stacked on axis 0)."""
    if D < 2:
        raise ConfigError(f"additive sharing needs D >= 2, got {D}")
    secret = modulus.array(secret)
    shares = np.empty((D,) + secret.shape, dtype=np.int64)
    shares[:-1] = rng.field_array(modulus, (D - 1,) + secret.shape)
    shares[-1] = modulus.sub(secret, modulus.sum(shares[:-1], axis=0))
    return shares


def additive_share(ballot: Sequence[int | FieldElement], D: int, modulus: PrimeModulus,
                   rng: RandomSource, voter_tag: Hashable = None) -> list[ShareVector]:
    values = [int(v) for v in ballot]
    if any(v < 0 or v >= modulus.p for v in values):
        raise ConfigError("ballot entries must lie in [0, p)")
    stacked = additive_share_array(np.array(values, dtype=np.int64), D, modulus, rng)
    return [ShareVector(d + 1, tuple(int(v) for v in row), voter_tag)
            for d, row in enumerate(stacked)]


def additive_reconstruct(shares: Sequence[ShareVector], modulus: PrimeModulus,
                         D: int | None = None) -> list[int]:
    if not shares:
        raise ShareSetError("no shares given")
    D = len(shares) if D is None else D
    indices = sorted(s.tallier for s in shares)
    if indices != list(range(1, D + 1)):
        raise ShareSetError(f"expected one share per tallier 1..{D}, got {indices}")
    if len({s.voter_tag for s in shares}) != 1:
        raise ShareSetError("shares belong to different voters")
    if len({len(s) for s in shares}) != 1:
        raise ShareSetError("share vectors differ in length")
    stacked = np.array([s.entries for s in shares], dtype=np.int64)
    return [int(v) for v in modulus.sum(stacked, axis=0)]


# --- Shamir ----------------------------------------------------------------


@lru_cache(maxsize=512)
def lagrange_at_zero(points: tuple[int, ...], p: int) -> tuple[int, ...]:
    """Coefficients ``l_i`` with ``f(0) = sum_i l_i f(points[i])``."""
    coeffs = []
    for i, xi in enumerate(points):
        num, den = 1, 1
        for j, xj in enumerate(points):
            if i != j:
                num = num * (-xj) % p
                den = den * (xi - xj) % p
        coeffs.append(num * pow(den, -1, p) % p)
    return tuple(coeffs)


def _check_points(points: Sequence[int], p: int) -> tuple[int, ...]:
    pts = tuple(int(x) % p for x in points)
    if len(set(pts)) != len(pts):
        raise ConfigError("evaluation points must be distinct")
    if 0 in pts:
        raise ConfigError("evaluation points must be nonzero")
    return pts


def shamir_share_array(secret: np.ndarray, t: int, points: Sequence[int],
                       modulus: PrimeModulus, rng: RandomSource) -> np.ndarray:
    """Evaluate a random degree-``t`` polynomial per entry at each point."""
    pts = _check_points(points, modulus.p)
    if t < 0 or t + 1 > len(pts):
        raise ConfigError(f"degree {t} needs at least {t + 1} points")
    secret = modulus.array(secret)
    coeffs = rng.field_array(modulus, (t,) + secret.shape)
    out = np.empty((len(pts),) + secret.shape, dtype=np.int64)
    for k, x in enumerate(pts):
        # Horner from the top coefficient down
        acc = np.zeros_like(secret)
        for c in coeffs[::-1]:
            acc = modulus.add(modulus.scale(acc, x), c)
        out[k] = modulus.add(modulus.scale(acc, x), secret)
    return out


def shamir_reconstruct_array(shares: np.ndarray, points: Sequence[int],
                             modulus: PrimeModulus) -> np.ndarray:
    pts = _check_points(points, modulus.p)
    if len(pts) != len(shares):
        raise ShareSetError("one point per share row required")
    return modulus.dot(lagrange_at_zero(pts, modulus.p), shares)


def shamir_share(secret: FieldElement | int, t: int, points: Sequence[int],
                 modulus: PrimeModulus, rng: RandomSource) -> list[ShamirShare]:
    values = shamir_share_array(np.array(int(secret), dtype=np.int64), t, points, modulus, rng)
    return [ShamirShare(int(x) % modulus.p, int(v), t) for x, v in zip(points, values)]


def shamir_reconstruct(shares: Sequence[ShamirShare], modulus: PrimeModulus) -> FieldElement:
    if not shares:
        raise InsufficientShares("no shares given")
    degrees = {s.degree for s in shares}
    if len(degrees) != 1:
        raise ShareSetError(f"inconsistent degrees {sorted(degrees)}")
    t = degrees.pop()
    points = [s.point for s in shares]
    if len(set(points)) != len(points):
        raise ShareSetError("duplicate evaluation points")
    if len(shares) < t + 1:
        raise InsufficientShares(f"degree {t} needs {t + 1} shares, got {len(shares)}")
    use = shares[: t + 1]
    coeffs = lagrange_at_zero(tuple(s.point for s in use), modulus.p)
    acc = 0
    for c, s in zip(coeffs, use):
        acc = (acc + c * s.value) % modulus.p
    return FieldElement(acc, modulus)
