"""Run a set of tallier engines inside one event loop (simulation mode)."""

from __future__ import annotations

import asyncio
import hashlib
from typing import Awaitable, Callable

from ..field import PrimeModulus, RandomSource
from ..net.transport import MemoryNetwork
from ..net.wire import KeyRing
from .dealer import TripleDealer
from .engine import Engine


def session_id(*parts) -> bytes:
    h = hashlib.sha256()
    for part in parts:
        h.update(repr(part).encode())
        h.update(b"\\x00")
    return h.digest()[:16]


def make_engines(D: int, modulus: PrimeModulus, seed=None, t: int | None = None,
                 network=None, auto_preprocess: bool = True, **kwargs) -> list[Engine]:
    t = (D - 1) // 2 if t is None else t
    root = RandomSource(seed)
    key_rng, dealer_rng, *party_rngs = root.spawn(D + 2)
    session = session_id("engines", D, modulus.p, t, seed)
    if network is None:
        network = MemoryNetwork(session, KeyRing(key_rng.bytes(32)), modulus)
    dealer = TripleDealer(modulus, D, t, dealer_rng)
    return [Engine(d, D, t, modulus, network.endpoint(d), party_rngs[d - 1], dealer,
                   session=session, auto_preprocess=auto_preprocess, **kwargs)
            for d in range(1, D + 1)]


async def gather_parties(engines: list[Engine], fn: Callable[[Engine], Awaitable]):
    return await asyncio.gather(*(fn(e) for e in engines))


def run_parties(engines: list[Engine], fn: Callable[[Engine], Awaitable]) -> list:
    """Run ``fn`` on every engine concurrently and return the per-party results."""
    return asyncio.run(gather_parties(engines, fn))
