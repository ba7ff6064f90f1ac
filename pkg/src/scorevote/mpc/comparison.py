"""Constant-round secure comparison.

``less_than`` reduces to a least-significant-bit extraction: for values
bounded by ``B < p/2``, ``u < v`` iff ``2(u - v) mod p`` is odd.  The LSB
of a shared ``x`` is found by masking it with a random ``r < p`` whose
bits are shared, opening ``c = x + r``, and correcting ``c_0 xor r_0`` by
the wrap-around bit ``[c < r]``.

``[c < r]`` for public ``c`` and shared bits of ``r`` is computed without
a log-depth carry chain.  With ``e_i = c_i xor r_i`` and the suffix counts
``S_i = sum_{j >= i} e_j``, the first differing bit sits where
``[S_{i+1} = 0] - [S_i = 0]`` is one, and each zero test is a public
polynomial in ``S_i + 1`` (nonzero).  Its powers come from a single
opening of ``(S_i + 1) * rho_i`` against preprocessed ``rho_i**-k``.

Everything input-independent (shared random bits, the solved-bits
rejection check, ``rho`` and its inverse powers) is produced ahead of time
in the engine's offline phase.  The online phase takes four rounds for
``less_than`` and six for ``less_than_full``, independent of ``D`` and
``p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import PreprocessingError
from .engine import Engine, SharedValue, concat


@lru_cache(maxsize=None)
def zero_indicator_coeffs(degree: int, p: int) -> tuple[int, ...]:
    """Coefficients (low to high) of the degree-``degree`` polynomial that is
    1 at ``x = 1`` and 0 at ``x = 2, ..., degree + 1``."""
    poly = [1]
    denom = 1
    for j in range(2, degree + 2):
        nxt = [0] * (len(poly) + 1)
        for k, a in enumerate(poly):
            nxt[k + 1] = (nxt[k + 1] + a) % p
            nxt[k] = (nxt[k] - j * a) % p
        poly = nxt
        denom = denom * (1 - j) % p
    inv = pow(denom, -1, p)
    return tuple(a * inv % p for a in poly)


@lru_cache(maxsize=None)
def _coeff_matrix(l: int, p: int) -> np.ndarray:
    """Row ``i`` holds the indicator polynomial of degree ``l - i``."""
    mat = np.zeros((l, l + 1), dtype=np.int64)
    for i in range(l):
        coeffs = zero_indicator_coeffs(l - i, p)
        mat[i, : len(coeffs)] = coeffs
    return mat


def reference_gate_formula(p: int) -> int:
    """Multiplication count quoted for the cited full-range comparison circuit."""
    return 279 * p.bit_length() + 5


def bits_of(values: np.ndarray, l: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    return (values[..., None] >> np.arange(l, dtype=np.int64)) & 1


@dataclass
class RhoMaterial:
    rho: SharedValue        # (n, l) uniform nonzero
    inv_powers: SharedValue  # (n, l, l): [.., i, k-1] = rho_i**-k for k <= l - i

    def __getitem__(self, idx) -> "RhoMaterial":
        return RhoMaterial(self.rho[idx], self.inv_powers[idx])

    def __len__(self):
        return len(self.rho)


@dataclass
class LsbMaterial:
    bits: SharedValue       # (n, l) bits of r, least significant first
    r: SharedValue          # (n,) r = sum 2**i bits_i, with r < p
    rho: RhoMaterial

    def __getitem__(self, idx) -> "LsbMaterial":
        return LsbMaterial(self.bits[idx], self.r[idx], self.rho[idx])

    def __len__(self):
        return len(self.r)


def _join(items: list[LsbMaterial]) -> LsbMaterial:
    return LsbMaterial(
        concat([m.bits for m in items]),
        concat([m.r for m in items]),
        RhoMaterial(concat([m.rho.rho for m in items]), concat([m.rho.inv_powers for m in items])),
    )


async def rho_material(eng: Engine, n: int) -> RhoMaterial:
    """Random invertible masks and their inverse powers, doubling per round."""
    l = eng.modulus.bits
    rho, rho_inv = await eng.rand_invertible((n, l))
    pows = np.zeros((n, l, l), dtype=np.int64)
    pows[:, :, 0] = rho_inv.share
    known = 1
    while known < l:
        idx_i, idx_k = [], []
        for k in range(known + 1, min(2 * known, l) + 1):
            for i in range(0, l - k + 1):
                idx_i.append(i)
                idx_k.append(k)
        idx_i = np.array(idx_i, dtype=np.intp)
        idx_k = np.array(idx_k, dtype=np.intp)
        if len(idx_i):
            left = SharedValue(pows[:, idx_i, known - 1], eng)
            right = SharedValue(pows[:, idx_i, idx_k - known - 1], eng)
            prod = await eng.mul(left, right, "rho-powers")
            pows[:, idx_i, idx_k - 1] = prod.share
        known = min(2 * known, l)
    return RhoMaterial(rho, SharedValue(pows, eng))


async def bitwise_less_than_public(eng: Engine, c_bits: np.ndarray, r_bits: SharedValue,
                                   mat: RhoMaterial) -> SharedValue:
    """Shared ``[c < r]`` for public bits of ``c`` and shared bits of ``r``.

    Two rounds (one multiplication layer, one opening), ``n*l`` gates.
    """
    f = eng.modulus
    l = r_bits.shape[-1]
    c_bits = np.asarray(c_bits, dtype=np.int64)
    # e = c xor r, linear because c is public
    e = f.add(f.mul(r_bits.share, f.array(1 - 2 * c_bits)), c_bits)
    suffix = np.cumsum(e[:, ::-1], axis=1)[:, ::-1] % f.p
    A = SharedValue(f.add(suffix, 1), eng)
    masked = await eng.mul(A, mat.rho, "lt-mask")
    m = await eng.reveal(masked, "lt-powers")
    n = m.shape[0]
    mpow = np.empty((n, l, l), dtype=np.int64)
    mpow[:, :, 0] = m
    for k in range(1, l):
        mpow[:, :, k] = f.mul(mpow[:, :, k - 1], m)
    coeffs = _coeff_matrix(l, f.p)
    weights = f.mul(mpow, coeffs[None, :, 1:])
    Z = f.sum(f.mul(weights, mat.inv_powers.share), axis=2)
    Z = f.add(Z, coeffs[None, :, 0])
    Zext = np.concatenate([Z, np.ones((n, 1), dtype=np.int64)], axis=1)
    first_diff = f.sub(Zext[:, 1:], Zext[:, :-1])
    lt = f.sum(f.mul(first_diff, 1 - c_bits), axis=1)
    return SharedValue(lt, eng)


async def solved_bits(eng: Engine, n: int) -> tuple[SharedValue, SharedValue]:
    """``n`` uniform ``r in [0, p)`` with shared binary decompositions."""
    f = eng.modulus
    l = f.bits
    accept = f.p / float(1 << l)
    weights = np.array([1 << i for i in range(l)], dtype=np.int64)
    limit = bits_of(np.array([f.p - 1]), l)
    kept: list[np.ndarray] = []
    have = 0
    while have < n:
        need = n - have
        m = int(need / accept) + int(need * (1 - accept)) + 2
        bits = await eng.rand_bit((m, l))
        mat = await rho_material(eng, m)
        too_big = await bitwise_less_than_public(eng, np.broadcast_to(limit, (m, l)), bits, mat)
        rejected = await eng.reveal(too_big, "solved-bits-check")
        ok = np.nonzero(rejected == 0)[0][:need]
        kept.append(bits.share[ok])
        have += len(ok)
    bits = np.concatenate(kept)
    r = f.sum(f.mul(bits, weights % f.p), axis=1)
    return SharedValue(bits, eng), SharedValue(r, eng)


async def preprocess_lsb(eng: Engine, n: int) -> LsbMaterial:
    """Input-independent material for ``n`` LSB extractions (offline phase)."""
    with eng.phase("offline"):
        bits, r = await solved_bits(eng, n)
        mat = await rho_material(eng, n)
    material = LsbMaterial(bits, r, mat)
    pool: list[LsbMaterial] = eng.pools.setdefault("lsb", [])
    pool.append(material)
    return material


def lsb_available(eng: Engine) -> int:
    return sum(len(m) for m in eng.pools.get("lsb", []))


async def take_lsb_material(eng: Engine, n: int) -> LsbMaterial:
    have = lsb_available(eng)
    if have < n:
        if not eng.auto_preprocess:
            raise PreprocessingError(f"need {n} comparison tuples, {have} preprocessed")
        await preprocess_lsb(eng, n - have)
    pool: list[LsbMaterial] = eng.pools["lsb"]
    taken, need = [], n
    while need:
        head = pool[0]
        if len(head) <= need:
            taken.append(pool.pop(0))
            need -= len(head)
        else:
            taken.append(head[:need])
            pool[0] = head[need:]
            need = 0
    return taken[0] if len(taken) == 1 else _join(taken)


async def lsb(eng: Engine, x: SharedValue) -> SharedValue:
    """Shared least significant bit of the representative of ``x``."""
    shape = x.shape
    flat = x.reshape(-1)
    n = flat.size
    f = eng.modulus
    mat = await take_lsb_material(eng, n)
    c = await eng.reveal(flat + mat.r, "lsb-mask")
    c_bits = bits_of(c, f.bits)
    wrapped = await bitwise_less_than_public(eng, c_bits, mat.bits, mat.rho)
    c0 = c_bits[:, 0]
    y = SharedValue(f.add(f.mul(mat.bits.share[:, 0], f.array(1 - 2 * c0)), c0), eng)
    yo = await eng.mul(y, wrapped, "lsb-xor")
    out = y + wrapped - yo * 2
    return out.reshape(shape)


async def less_than(eng: Engine, x: SharedValue, y: SharedValue) -> SharedValue:
    """Shared ``[x < y]`` for secrets in ``[0, B]`` with ``B < p/2``."""
    return await lsb(eng, (x - y) * 2)


async def less_than_full(eng: Engine, x: SharedValue, y: SharedValue) -> SharedValue:
    """Shared ``[x < y]`` for arbitrary representatives in ``[0, p)``.

    Combines three half-range tests ``[x < p/2]``, ``[y < p/2]`` and
    ``[x - y < p/2]``, evaluated in parallel.
    """
    x, y = (SharedValue(a, eng) for a in np.broadcast_arrays(x.share, y.share))
    n = x.size
    tests = concat([(x * 2).reshape(-1), (y * 2).reshape(-1), ((x - y) * 2).reshape(-1)])
    half = 1 - await lsb(eng, tests)
    w, v, d = half[:n], half[n:2 * n], half[2 * n:]
    wv = await eng.mul(w, v, "lt-combine")
    same_side = 1 - w - v + wv * 2
    tail = await eng.mul(same_side, 1 - d, "lt-combine")
    return (w - wv + tail).reshape(x.shape)
