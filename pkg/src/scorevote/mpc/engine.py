"""Semi-honest, honest-majority MPC over Shamir shares.

One :class:`Engine` runs per tallier.  Engines are coroutines that talk
only through their :class:`~scorevote.net.transport.Endpoint`; every
interactive step is one *round*: send to all peers, then wait for all
peers' messages tagged with the same round number.

Shared values are vectors: a :class:`SharedValue` wraps this tallier's
share of an arbitrary-shape array of secrets, so a batch of gates costs a
single round.
"""

from __future__ import annotations

import contextlib
import hashlib
from typing import Iterable, Sequence

import numpy as np

from ..errors import AbortError, PreprocessingError, SessionError
from ..field import PrimeModulus, RandomSource
from ..net.transport import Endpoint
from ..net.wire import Kind, Message
from ..sharing import lagrange_at_zero, shamir_share_array
from .dealer import TripleDealer
from .stats import DISCLOSURE_CATEGORIES, CircuitStats, Disclosure, Transcript


class SharedValue:
    """This tallier's share of a (vector of) secret field element(s)."""

    __slots__ = ("share", "engine")

    def __init__(self, share, engine: "Engine"):
        self.share = np.asarray(share, dtype=np.int64)
        self.engine = engine

    @property
    def shape(self):
        return self.share.shape

    @property
    def size(self) -> int:
        return self.share.size

    def __len__(self):
        return len(self.share)

    def __getitem__(self, idx) -> "SharedValue":
        return SharedValue(self.share[idx], self.engine)

    def reshape(self, *shape) -> "SharedValue":
        return SharedValue(self.share.reshape(*shape), self.engine)

    def _field(self) -> PrimeModulus:
        return self.engine.modulus

    def _other(self, other):
        if isinstance(other, SharedValue):
            if other.engine is not self.engine:
                raise SessionError("shared values belong to different sessions")
            return other.share, True
        return self._field().array(other), False

    def __add__(self, other):
        o, _ = self._other(other)
        # adding a public constant to every share shifts the polynomial's constant term
        return SharedValue(self._field().add(self.share, o), self.engine)

    __radd__ = __add__

    def __sub__(self, other):
        o, _ = self._other(other)
        return SharedValue(self._field().sub(self.share, o), self.engine)

    def __rsub__(self, other):
        o, _ = self._other(other)
        return SharedValue(self._field().sub(o, self.share), self.engine)

    def __neg__(self):
        return SharedValue(self._field().neg(self.share), self.engine)

    def __mul__(self, other):
        if isinstance(other, SharedValue):
            raise TypeError("multiplying two shared values is interactive; use Engine.mul")
        return SharedValue(self._field().mul(self.share, self._field().array(other)), self.engine)

    __rmul__ = __mul__

    def sum(self, axis=None) -> "SharedValue":
        return SharedValue(self._field().sum(self.share, axis=axis), self.engine)

    def __repr__(self):
        return f"SharedValue(shape={self.shape}, party={self.engine.party})"


def add_shared(x: SharedValue, y: SharedValue) -> SharedValue:
    return x + y


def scale_public(x: SharedValue, c) -> SharedValue:
    return x * c


def stack(values: Sequence[SharedValue], axis: int = 0) -> SharedValue:
    engines = {id(v.engine) for v in values}
    if len(engines) != 1:
        raise SessionError("cannot stack values from different sessions")
    return SharedValue(np.stack([v.share for v in values], axis=axis), values[0].engine)


def concat(values: Sequence[SharedValue], axis: int = 0) -> SharedValue:
    engines = {id(v.engine) for v in values}
    if len(engines) != 1:
        raise SessionError("cannot join values from different sessions")
    return SharedValue(np.concatenate([v.share for v in values], axis=axis), values[0].engine)


class Engine:
    def __init__(self, party: int, D: int, t: int, modulus: PrimeModulus,
                 endpoint: Endpoint, rng: RandomSource, dealer: TripleDealer | None = None,
                 session: bytes = b"\0" * 16, auto_preprocess: bool = True,
                 timeout: float | None = None, check_opens: bool = True):
        if not 1 <= party <= D:
            raise ValueError(f"tallier index {party} outside [1, {D}]")
        if 2 * t + 1 > D:
            raise ValueError(f"degree {t} needs an honest majority of {2 * t + 1} talliers")
        self.party = party
        self.index = party - 1
        self.D = D
        self.t = t
        self.modulus = modulus
        self.net = endpoint
        self.rng = rng
        self.dealer = dealer
        self.session = session
        self.auto_preprocess = auto_preprocess
        self.timeout = timeout
        self.check_opens = check_opens
        self.points = tuple(range(1, D + 1))
        self.peers = [j for j in self.points if j != party]
        self._round = 0
        self._phase = "online"
        self.stats = {"offline": CircuitStats(), "online": CircuitStats()}
        self.transcript = Transcript(party)
        self._triples = (np.empty(0, np.int64),) * 3
        self._triple_pos = 0
        self.pools: dict[str, object] = {}

    # -- bookkeeping ---------------------------------------------------------

    @property
    def current(self) -> CircuitStats:
        return self.stats[self._phase]

    @property
    def total(self) -> CircuitStats:
        return self.stats["offline"] + self.stats["online"]

    @contextlib.contextmanager
    def phase(self, name: str):
        if name not in self.stats:
            raise ValueError(f"unknown phase {name!r}")
        prev, self._phase = self._phase, name
        try:
            yield
        finally:
            self._phase = prev

    def snapshot(self) -> dict[str, CircuitStats]:
        return {k: v.copy() for k, v in self.stats.items()}

    def wrap(self, share) -> SharedValue:
        return SharedValue(share, self)

    def constant(self, value, shape=()) -> SharedValue:
        """A public constant viewed as a (degree-0) sharing."""
        return SharedValue(np.broadcast_to(self.modulus.array(value), shape).copy(), self)

    # -- communication -------------------------------------------------------

    async def exchange(self, kind: Kind, out, label: str) -> list[np.ndarray]:
        """One round: send ``out`` (array, or per-party list) to every peer.

        Returns the arrays received, indexed by sender position, with this
        party's own contribution in its slot.
        """
        r = self._round
        self._round += 1
        per_party = isinstance(out, list)
        mine = out[self.index] if per_party else out
        before = self.net.bytes_sent
        for j in self.peers:
            payload = out[j - 1] if per_party else out
            await self.net.send(j, Message(kind, self.party, r, np.ascontiguousarray(payload)))
        got: list[np.ndarray] = [None] * self.D  # type: ignore[list-item]
        got[self.index] = np.asarray(mine)
        for j in self.peers:
            msg = await self.net.recv(j, kind, r, self.timeout)
            got[j - 1] = self.net.array(msg.payload).reshape(np.shape(got[self.index]))
        sent = self.net.bytes_sent - before
        st = self.current
        st.rounds += 1
        st.bytes_sent += sent
        self.transcript.event(f"r={r} {self._phase} {kind.name} {label} n={np.size(mine)} bytes={sent}")
        return got

    async def exchange_bytes(self, kind: Kind, data: bytes, label: str) -> list[bytes]:
        r = self._round
        self._round += 1
        before = self.net.bytes_sent
        for j in self.peers:
            await self.net.send(j, Message(kind, self.party, r, data))
        got: list[bytes] = [b""] * self.D
        got[self.index] = data
        for j in self.peers:
            msg = await self.net.recv(j, kind, r, self.timeout)
            got[j - 1] = bytes(msg.payload)
        sent = self.net.bytes_sent - before
        self.current.rounds += 1
        self.current.bytes_sent += sent
        self.transcript.event(f"r={r} {self._phase} {kind.name} {label} bytes={sent}")
        return got

    def _reconstruct(self, stacked: np.ndarray) -> np.ndarray:
        f = self.modulus
        head = self.points[: self.t + 1]
        value = f.dot(lagrange_at_zero(head, f.p), stacked[: self.t + 1])
        if self.check_opens and self.D > self.t + 1:
            tail = self.points[-(self.t + 1):]
            other = f.dot(lagrange_at_zero(tail, f.p), stacked[-(self.t + 1):])
            if not np.array_equal(value, other):
                raise AbortError("opened shares are inconsistent")
        return value

    async def reveal(self, x: SharedValue, label: str = "masked") -> np.ndarray:
        """Open a value that is uniformly masked (sub-protocol internal)."""
        got = await self.exchange(Kind.MASKED, x.share, label)
        self.current.opened += x.size
        return self._reconstruct(np.stack(got))

    async def open(self, x: SharedValue, category: str = "output", label: str = "") -> np.ndarray:
        """Make a shared value public; the only way secrets become disclosures."""
        if category not in DISCLOSURE_CATEGORIES:
            raise ValueError(f"undeclared disclosure category {category!r}")
        self._check(x)
        r = self._round
        got = await self.exchange(Kind.OPEN, x.share, f"open:{category}:{label}")
        value = self._reconstruct(np.stack(got))
        self.current.opened += x.size
        self.transcript.disclose(Disclosure(r, category, label, tuple(int(v) for v in value.ravel())))
        return value

    def _check(self, *values: SharedValue) -> None:
        for v in values:
            if v.engine is not self:
                raise SessionError("shared value from another session")

    # -- input and randomness --------------------------------------------------

    async def share_from_each(self, local, label: str = "reshare") -> list[SharedValue]:
        """Every tallier Shamir-shares its own array; returns one sharing per dealer."""
        local = self.modulus.array(local)
        subs = shamir_share_array(local, self.t, self.points, self.modulus, self.rng)
        got = await self.exchange(Kind.RESHARE, [subs[k] for k in range(self.D)], label)
        return [SharedValue(g, self) for g in got]

    async def input(self, value, owner: int, shape=()) -> SharedValue:
        """Secret-share ``value`` held by tallier ``owner``."""
        local = value if self.party == owner else np.zeros(shape, dtype=np.int64)
        parts = await self.share_from_each(np.broadcast_to(self.modulus.array(local), shape), "input")
        return parts[owner - 1]

    async def reshare_sum(self, local, label: str = "reshare") -> SharedValue:
        """Threshold sharing of ``sum_d local_d`` from per-tallier additive pieces."""
        parts = await self.share_from_each(local, label)
        f = self.modulus
        return SharedValue(f.sum(np.stack([p.share for p in parts]), axis=0), self)

    async def rand(self, shape=()) -> SharedValue:
        """Uniform shared element; unknown to any coalition of at most t talliers."""
        return await self.reshare_sum(self.rng.field_array(self.modulus, shape), "rand")

    async def coins(self, shape=()) -> np.ndarray:
        """Public uniform coins via commit-then-reveal; fixed only once all commit."""
        f = self.modulus
        mine = self.rng.field_array(f, shape)
        salt = self.rng.bytes(16)
        body = salt + mine.astype(">u8").tobytes()
        digest = hashlib.sha256(self.session + bytes([self.party & 0xFF]) + body).digest()
        commits = await self.exchange_bytes(Kind.COMMIT, digest, "coin-commit")
        reveals = await self.exchange_bytes(Kind.REVEAL, body, "coin-reveal")
        total = np.zeros(shape, dtype=np.int64)
        for j, (c, b) in enumerate(zip(commits, reveals)):
            check = hashlib.sha256(self.session + bytes([(j + 1) & 0xFF]) + b).digest()
            if check != c:
                raise AbortError(f"tallier {j + 1} opened a coin inconsistent with its commitment")
            vals = np.frombuffer(b[16:], dtype=">u8").astype(np.int64).reshape(shape)
            total = f.add(total, vals % f.p)
        return total

    async def rand_invertible(self, shape=()) -> tuple[SharedValue, SharedValue]:
        """Uniform nonzero ``r`` together with a sharing of ``r**-1``."""
        f = self.modulus
        n = int(np.prod(shape, dtype=np.int64))
        r_out = np.empty(n, np.int64)
        inv_out = np.empty(n, np.int64)
        filled = 0
        while filled < n:
            need = n - filled
            m = need + need // max(1, f.p // 8) + 2
            both = await self.rand((2, m))
            prod = await self.mul(both[0], both[1])
            opened = await self.reveal(prod, "invertible")
            ok = np.nonzero(opened)[0][:need]
            inv_opened = f.inv(opened[ok])
            r_out[filled:filled + len(ok)] = both.share[0][ok]
            inv_out[filled:filled + len(ok)] = f.mul(both.share[1][ok], inv_opened)
            filled += len(ok)
        return SharedValue(r_out.reshape(shape), self), SharedValue(inv_out.reshape(shape), self)

    async def rand_nonzero(self, shape=()) -> SharedValue:
        r, _ = await self.rand_invertible(shape)
        return r

    async def rand_bit(self, shape=()) -> SharedValue:
        """Uniform shared bit: open ``r**2`` and divide ``r`` by the canonical root."""
        f = self.modulus
        n = int(np.prod(shape, dtype=np.int64))
        out = np.empty(n, np.int64)
        filled = 0
        inv2 = pow(2, -1, f.p)
        while filled < n:
            need = n - filled
            m = need + need // max(1, f.p // 8) + 2
            r = await self.rand((m,))
            sq = await self.mul(r, r)
            opened = await self.reveal(sq, "bit-square")
            ok = np.nonzero(opened)[0][:need]
            root_inv = f.inv(f.sqrt(opened[ok]))
            # r / root is +1 or -1 with equal probability
            sign = f.mul(r.share[ok], root_inv)
            out[filled:filled + len(ok)] = f.scale(f.add(sign, 1), inv2)
            filled += len(ok)
        return SharedValue(out.reshape(shape), self)

    # -- multiplication --------------------------------------------------------

    def add_triples(self, a, b, c) -> None:
        pos = self._triple_pos
        self._triples = tuple(np.concatenate([old[pos:], new])
                              for old, new in zip(self._triples, (a, b, c)))
        self._triple_pos = 0

    @property
    def triples_available(self) -> int:
        return len(self._triples[0]) - self._triple_pos

    def fetch_triples(self, n: int) -> None:
        if self.dealer is None:
            raise PreprocessingError("no triple source configured")
        self.add_triples(*self.dealer.fetch(self.index, n))

    def _take_triples(self, n: int):
        if self.triples_available < n:
            if not self.auto_preprocess:
                raise PreprocessingError(
                    f"need {n} multiplication triples, {self.triples_available} available")
            self.fetch_triples(n - self.triples_available)
        s = slice(self._triple_pos, self._triple_pos + n)
        self._triple_pos += n
        return tuple(arr[s] for arr in self._triples)

    async def mul(self, x: SharedValue, y: SharedValue, label: str = "mul") -> SharedValue:
        """Beaver multiplication of equally shaped (or broadcastable) values."""
        self._check(x, y)
        xs, ys = np.broadcast_arrays(x.share, y.share)
        shape = xs.shape
        n = xs.size
        if n == 0:
            return SharedValue(np.zeros(shape, np.int64), self)
        f = self.modulus
        a, b, c = self._take_triples(n)
        d_loc = f.sub(xs.ravel(), a)
        e_loc = f.sub(ys.ravel(), b)
        got = await self.exchange(Kind.MASKED, np.concatenate([d_loc, e_loc]), label)
        de = self._reconstruct(np.stack(got))
        d, e = de[:n], de[n:]
        z = f.add(f.add(c, f.mul(d, b)), f.add(f.mul(e, a), f.mul(d, e)))
        st = self.current
        st.mult_gates += n
        st.mult_rounds += 1
        return SharedValue(z.reshape(shape), self)

    async def batch_mul(self, pairs: Iterable[tuple[SharedValue, SharedValue]]) -> list[SharedValue]:
        """All products in a single round."""
        pairs = list(pairs)
        if not pairs:
            return []
        self._check(*(v for pr in pairs for v in pr))
        xs = [np.broadcast_arrays(x.share, y.share) for x, y in pairs]
        shapes = [a.shape for a, _ in xs]
        flat_x = SharedValue(np.concatenate([a.ravel() for a, _ in xs]), self)
        flat_y = SharedValue(np.concatenate([b.ravel() for _, b in xs]), self)
        prod = await self.mul(flat_x, flat_y, "batch-mul")
        out, pos = [], 0
        for shape in shapes:
            n = int(np.prod(shape, dtype=np.int64))
            out.append(SharedValue(prod.share[pos:pos + n].reshape(shape), self))
            pos += n
        return out

    async def prod(self, factors: SharedValue, label: str = "prod") -> SharedValue:
        """Product along axis 0 by a balanced tree: ``k-1`` gates, ``ceil(log2 k)`` rounds."""
        layer = factors
        while len(layer) > 1:
            half = len(layer) // 2
            paired = await self.mul(layer[:half], layer[half:2 * half], label)
            if len(layer) % 2:
                paired = concat([paired, layer[2 * half:]])
            layer = paired
        return layer[0]

    async def product_chain(self, x: SharedValue, c: int) -> SharedValue:
        """``x (x-1) ... (x-c+1)``, elementwise."""
        if c < 1:
            raise ValueError("chain length must be at least 1")
        self._check(x)
        f = self.modulus
        factors = np.stack([f.sub(x.share, i % f.p) if i else x.share for i in range(c)])
        return await self.prod(SharedValue(factors, self), "chain")

    async def zero_test(self, values: SharedValue, repeats: int = 1,
                        label: str = "zero-test") -> np.ndarray:
        """Per-row test that every entry along the last axis is zero.

        Rows are combined with public coins drawn after the values are
        fixed, so a nonzero row passes with probability ``p**-repeats``.
        Only the random combinations are opened.
        """
        self._check(values)
        f = self.modulus
        share = values.share
        if share.ndim == 0:
            share = share.reshape(1, 1)
        elif share.ndim == 1:
            share = share.reshape(1, -1)
        rows = share.reshape(-1, share.shape[-1])
        ok = np.ones(len(rows), dtype=bool)
        if rows.shape[1] == 0 or len(rows) == 0:
            return ok.reshape(share.shape[:-1]) if values.share.ndim > 1 else bool(ok.all())
        for k in range(repeats):
            r = await self.coins((len(rows), rows.shape[1]))
            combo = f.sum(f.mul(rows, r), axis=1)
            opened = await self.open(SharedValue(combo, self), "validation", f"{label}#{k}")
            ok &= opened == 0
        if values.share.ndim <= 1:
            return bool(ok.all())
        return ok.reshape(share.shape[:-1])

    async def randomized_zero_test(self, values: Sequence[SharedValue], repeats: int = 1) -> bool:
        if not values:
            return True
        flat = concat([v.reshape(-1) for v in values])
        return bool(await self.zero_test(flat, repeats))
