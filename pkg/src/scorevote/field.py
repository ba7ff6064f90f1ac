"""Prime-field arithmetic.

Scalars are :class:`FieldElement` values; bulk share arithmetic works on
``int64`` numpy arrays holding canonical representatives, which requires
``p < 2**31.5`` so that a product of two representatives fits in 63 bits.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InversionOfZero, ModulusMismatch

P13 = (1 << 13) - 1
P31 = (1 << 31) - 1

NAMED_PRIMES = {"p13": P13, "p31": P31}

# products of two residues must stay below 2**63
_VECTOR_LIMIT = 3037000499

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for every n < 3.3 * 10**24."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeModulus:
    p: int
    bits: int = field(init=False)
    is_mersenne: bool = field(init=False)

    def __post_init__(self):
        p = int(self.p)
        if p >= 1 << 64:
            raise ConfigError(f"modulus {p} is not below 2**64")
        if not is_prime(p):
            raise ConfigError(f"modulus {p} is not prime")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "bits", p.bit_length())
        object.__setattr__(self, "is_mersenne", (p & (p + 1)) == 0)

    @classmethod
    def named(cls, name: str | int) -> "PrimeModulus":
        if isinstance(name, int):
            return cls(name)
        key = str(name).strip().lower()
        if key in NAMED_PRIMES:
            return cls(NAMED_PRIMES[key])
        try:
            return cls(int(key, 0))
        except ValueError:
            raise ConfigError(f"unknown prime {name!r}") from None

    @property
    def byte_width(self) -> int:
        """Bytes per serialized element (``ceil(bits / 8)``)."""
        return (self.bits + 7) // 8

    @property
    def vectorizable(self) -> bool:
        return self.p <= _VECTOR_LIMIT

    def check_bound(self, bound: int) -> None:
        if self.p <= bound:
            raise ConfigError(f"modulus too small for bound B={bound} (p={self.p})")

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(value, self)

    # -- vector arithmetic on canonical int64 arrays -------------------------

    def reduce(self, x):
        """Reduce non-negative integers below ``p**2`` to ``[0, p)``."""
        x = np.asarray(x, dtype=np.int64)
        if not self.is_mersenne:
            return x % self.p
        return mersenne_reduce(x, self.bits)

    def array(self, values) -> np.ndarray:
        return np.asarray(values, dtype=np.int64) % self.p

    def add(self, a, b):
        s = np.add(a, b, dtype=np.int64)
        return np.where(s >= self.p, s - self.p, s)

    def sub(self, a, b):
        s = np.subtract(a, b, dtype=np.int64)
        return np.where(s < 0, s + self.p, s)

    def neg(self, a):
        a = np.asarray(a, dtype=np.int64)
        return np.where(a == 0, a, self.p - a)

    def mul(self, a, b):
        return self.reduce(np.multiply(a, b, dtype=np.int64))

    def scale(self, a, c: int):
        return self.mul(a, int(c) % self.p)

    def pow(self, a, e: int):
        a = np.asarray(a, dtype=np.int64)
        result = np.ones_like(a)
        base = a.copy()
        e = int(e)
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise InversionOfZero("zero has no inverse")
        return self.pow(a, self.p - 2)

    def sqrt(self, a):
        """Canonical square roots (the root in ``[0, p/2]``) of residues."""
        a = np.asarray(a, dtype=np.int64)
        p = self.p
        if p % 4 == 3:
            r = self.pow(a, (p + 1) // 4)
        else:
            r = np.array([_tonelli(int(v), p) for v in a.ravel()], dtype=np.int64).reshape(a.shape)
        return np.where(r > p // 2, p - r, r)

    def sum(self, a, axis=None):
        # int64 sums stay exact up to ~2**32 addends of 31-bit values
        return np.sum(a, axis=axis, dtype=np.int64) % self.p

    def dot(self, coeffs, a):
        """Return ``sum_i coeffs[i] * a[i]`` along the first axis."""
        acc = np.zeros(np.shape(a)[1:], dtype=np.int64)
        for c, row in zip(coeffs, a):
            acc = self.add(acc, self.scale(row, c))
        return acc

    def signed(self, a):
        """Map representatives above ``p // 2`` to negative integers."""
        a = np.asarray(a, dtype=np.int64)
        return np.where(a > self.p // 2, a - self.p, a)


def mersenne_reduce(x: np.ndarray, k: int) -> np.ndarray:
    """Shift-and-add reduction modulo ``2**k - 1`` for ``0 <= x < 2**(2k)``."""
    p = (1 << k) - 1
    x = (x & p) + (x >> k)
    x = (x & p) + (x >> k)
    return np.where(x >= p, x - p, x)


def _tonelli(n: int, p: int) -> int:
    if n == 0:
        return 0
    if pow(n, (p - 1) // 2, p) != 1:
        raise ValueError(f"{n} is not a square mod {p}")
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(n, q, p), pow(n, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


@dataclass(frozen=True)
class FieldElement:
    value: int
    modulus: PrimeModulus

    def __post_init__(self):
        object.__setattr__(self, "value", int(self.value) % self.modulus.p)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.modulus.p != self.modulus.p:
                raise ModulusMismatch(
                    f"cannot combine elements of Z_{self.modulus.p} and Z_{other.modulus.p}"
                )
            return other.value
        if isinstance(other, (int, np.integer)):
            return int(other) % self.modulus.p
        return NotImplemented

    def _new(self, v: int) -> "FieldElement":
        return FieldElement(v, self.modulus)

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self._new(self.value + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self._new(self.value - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self._new(o - self.value)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.modulus.is_mersenne:
            k = self.modulus.bits
            p = self.modulus.p
            x = self.value * o
            x = (x & p) + (x >> k)
            x = (x & p) + (x >> k)
            return self._new(x - p if x >= p else x)
        return self._new(self.value * o)

    __rmul__ = __mul__

    def __neg__(self):
        return self._new(-self.value)

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return self._new(pow(self.value, e, self.modulus.p))

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise InversionOfZero("zero has no inverse")
        return self._new(pow(self.value, -1, self.modulus.p))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * self._new(o).inverse()

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.value == other.value and self.modulus.p == other.modulus.p
        if isinstance(other, (int, np.integer)):
            return self.value == int(other) % self.modulus.p
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.modulus.p))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"FieldElement({self.value} mod {self.modulus.p})"


def fe_arith(a: FieldElement, b: FieldElement, op: str) -> FieldElement:
    if op == "neg":
        return -a
    if a.modulus.p != b.modulus.p:
        raise ModulusMismatch(f"Z_{a.modulus.p} vs Z_{b.modulus.p}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def fe_inv(a: FieldElement) -> FieldElement:
    return a.inverse()


class RandomSource:
    """Byte-oriented randomness with rejection sampling into ``Z_p``.

    Seeded sources are reproducible (PCG64 stream); unseeded ones read
    ``os.urandom``.  One instance per party; not thread-safe.
    """

    def __init__(self, seed=None):
        if seed is None:
            self._gen = None
            self._seq = None
        else:
            self._seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
            self._gen = np.random.Generator(np.random.PCG64(self._seq))

    @property
    def seeded(self) -> bool:
        return self._gen is not None

    def spawn(self, n: int) -> list["RandomSource"]:
        if self._seq is None:
            return [RandomSource() for _ in range(n)]
        return [RandomSource(s) for s in self._seq.spawn(n)]

    def bytes(self, n: int) -> bytes:
        if self._gen is None:
            return os.urandom(n)
        return self._gen.bytes(n)

    def _words(self, n: int, bits: int) -> np.ndarray:
        raw = np.frombuffer(self.bytes(8 * n), dtype="<u8")
        return (raw & np.uint64((1 << bits) - 1)).astype(np.int64)

    def field_array(self, modulus: PrimeModulus, shape) -> np.ndarray:
        """Uniform elements of ``Z_p`` by mask-and-reject."""
        n = int(np.prod(shape, dtype=np.int64))
        out = np.empty(n, dtype=np.int64)
        filled = 0
        while filled < n:
            need = n - filled
            # acceptance rate is p / 2**bits >= 1/2
            draw = self._words(need + need // 2 + 8, modulus.bits)
            draw = draw[draw < modulus.p][:need]
            out[filled:filled + len(draw)] = draw
            filled += len(draw)
        return out.reshape(shape)

    def nonzero_field_array(self, modulus: PrimeModulus, shape) -> np.ndarray:
        n = int(np.prod(shape, dtype=np.int64))
        out = np.empty(n, dtype=np.int64)
        filled = 0
        while filled < n:
            draw = self.field_array(modulus, (n - filled + 4,))
            draw = draw[draw != 0][: n - filled]
            out[filled:filled + len(draw)] = draw
            filled += len(draw)
        return out.reshape(shape)

    def randbelow(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` for small ``n`` (rejection)."""
        if n <= 0:
            raise ValueError("n must be positive")
        bits = max(1, (n - 1).bit_length())
        while True:
            v = int(self._words(1, bits)[0])
            if v < n:
                return v

    def shuffle(self, items: list) -> list:
        items = list(items)
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]
        return items


def fe_sample_uniform(rng: RandomSource, modulus: PrimeModulus) -> FieldElement:
    return FieldElement(int(rng.field_array(modulus, (1,))[0]), modulus)
