"""Benchmark suites with structural cost counters, written as CSV rows.

Gate, round and byte columns are exactly reproducible from the recorded
seed in simulate mode; only ``wall_ms`` varies between runs.
"""

from __future__ import annotations

import asyncio
import csv
import io
import platform
import statistics
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from .field import NAMED_PRIMES, PrimeModulus, RandomSource
from .gen import generate_ballots
from .mpc.comparison import less_than, less_than_full, reference_gate_formula, preprocess_lsb
from .mpc.engine import Engine, SharedValue
from .mpc.sim import gather_parties, make_engines, session_id
from .mpc.stats import CircuitStats
from .net.tcp import TcpNetwork
from .net.wire import KeyRing
from .protocol.election import run_election
from .protocol.validation import validate_ballots
from .rules import ElectionConfig
from .sharing import additive_share_array

SUITES = ("compare", "verify", "election")
DEFAULT_TALLIERS = (3, 5, 7, 9)
DEFAULT_PRIMES = ("p13", "p31")
VERIFY_ENTRIES = 50_000


@dataclass
class BenchRow:
    suite: str
    operation: str
    D: int
    prime: str
    p: int
    mode: str
    seed: int
    reps: int
    n: int
    wall_ms: float
    rounds: int
    mult_rounds: int
    mult_gates: int
    offline_rounds: int
    offline_gates: int
    bytes_per_tallier: int
    reference_formula: int | str = ""
    status: str = "ok"


COLUMNS = [f.name for f in fields(BenchRow)]


def environment() -> str:
    return f"python {platform.python_version()} numpy {np.__version__} {platform.machine()}"


async def _engines(D: int, f: PrimeModulus, seed: int, mode: str) -> tuple[list[Engine], object]:
    if mode == "simulate":
        return make_engines(D, f, seed=seed), None
    root = RandomSource(seed)
    net = TcpNetwork(session_id("bench", D, f.p, seed), KeyRing(root.bytes(32)), f)
    for d in range(1, D + 1):
        await net.listen(d)
    return make_engines(D, f, seed=seed, network=net, timeout=60.0), net


async def _measure(D: int, f: PrimeModulus, seed: int, mode: str, prepare, body):
    """Run ``prepare`` then time ``body`` on every engine; stats of party 1."""
    engines, net = await _engines(D, f, seed, mode)
    try:
        state = await gather_parties(engines, prepare)
        before = engines[0].snapshot()
        start = time.perf_counter()
        await asyncio.gather(*(body(e, s) for e, s in zip(engines, state)))
        wall = (time.perf_counter() - start) * 1000
        online = engines[0].stats["online"] - before["online"]
        offline = engines[0].stats["offline"]
    finally:
        if net is not None:
            await net.close()
    return wall, online, offline


def _inputs(f: PrimeModulus, n: int, seed: int, bound: int):
    rng = np.random.default_rng(seed)
    return rng.integers(0, bound + 1, n), rng.integers(0, bound + 1, n)


def compare_cell(D: int, prime: str, seed: int, n: int = 100, mode: str = "simulate",
                 full: bool = False):
    """Wall time and counters for ``n`` batched comparisons (online phase only)."""
    f = PrimeModulus.named(prime)
    bound = (f.p - 1) // 2 - 1
    u, v = _inputs(f, n, seed, bound)

    async def prepare(eng: Engine):
        x = await eng.input(u, 1, (n,))
        y = await eng.input(v, 1, (n,))
        with eng.phase("offline"):
            await preprocess_lsb(eng, 3 * n if full else n)
        eng.stats["online"] = CircuitStats()
        return x, y

    async def body(eng: Engine, xy):
        x, y = xy
        fn = less_than_full if full else less_than
        eng.pools["bench-out"] = await fn(eng, x, y)

    return asyncio.run(_measure(D, f, seed, mode, prepare, body))


def verify_cell(D: int, prime: str, seed: int, entries: int = VERIFY_ENTRIES, M: int = 10,
                mode: str = "simulate"):
    """Validate ``entries`` Plurality ballot entries in one batch."""
    f = PrimeModulus.named(prime)
    V = entries // M
    config = ElectionConfig("plurality", N=1, M=M, D=D, modulus=f)
    rng = RandomSource(seed)
    choices = np.random.default_rng(seed).integers(0, M, V)
    ballots = np.zeros((V, M), dtype=np.int64)
    ballots[np.arange(V), choices] = 1
    shares = additive_share_array(ballots, D, f, rng)

    async def prepare(eng: Engine):
        X = await eng.reshare_sum(shares[eng.index], "reshare-ballots")
        eng.stats["online"] = CircuitStats()
        return X

    async def body(eng: Engine, X: SharedValue):
        verdicts = await validate_ballots(eng, config, X)
        eng.pools["bench-out"] = verdicts

    return asyncio.run(_measure(D, f, seed, mode, prepare, body))


def election_cell(D: int, prime: str, seed: int, mode: str = "simulate", N: int = 50, M: int = 5):
    f = PrimeModulus.named(prime)
    config = ElectionConfig("plurality", N=N, M=M, K=1, D=D, modulus=f)
    ballots = generate_ballots(config, seed)
    start = time.perf_counter()
    result = run_election(config, ballots, mode=mode, seed=seed)
    wall = (time.perf_counter() - start) * 1000
    st = result.stats[0]
    return wall, st["online"], st["offline"]


def run_cell(suite: str, D: int, prime: str, seed: int = 0, reps: int = 1,
             mode: str = "simulate", n: int = 100) -> BenchRow:
    p = NAMED_PRIMES[prime]
    if suite == "compare":
        op, size, formula = "comparison", n, reference_gate_formula(p)
        cell = lambda s: compare_cell(D, prime, s, n, mode)  # noqa: E731
    elif suite == "verify":
        op, size, formula = "verify_batch", VERIFY_ENTRIES, ""
        cell = lambda s: verify_cell(D, prime, s, mode=mode)  # noqa: E731
    elif suite == "election":
        op, size, formula = "full_election", 50, ""
        cell = lambda s: election_cell(D, prime, s, mode)  # noqa: E731
    else:
        raise ValueError(f"unknown suite {suite!r}")
    try:
        runs = [cell(seed + i) for i in range(reps)]
    except Exception as exc:  # a failing cell is reported, not fatal
        return BenchRow(suite, op, D, prime, p, mode, seed, reps, size, 0.0, 0, 0, 0, 0, 0, 0,
                        formula, f"skipped: {type(exc).__name__}: {exc}")
    wall = statistics.median(r[0] for r in runs)
    _, online, offline = runs[0]
    return BenchRow(suite, op, D, prime, p, mode, seed, reps, size, round(wall, 3),
                    online.rounds, online.mult_rounds, online.mult_gates,
                    offline.rounds, offline.mult_gates, online.bytes_sent + offline.bytes_sent,
                    formula)


def run_suite(suite: str, talliers=DEFAULT_TALLIERS, primes=DEFAULT_PRIMES, reps: int = 1,
              seed: int = 0, mode: str = "simulate", n: int = 100) -> list[BenchRow]:
    return [run_cell(suite, D, prime, seed, reps, mode, n) for prime in primes for D in talliers]


def to_csv(rows: list[BenchRow], env: str | None = None) -> str:
    buf = io.StringIO()
    if env:
        buf.write(f"# {env}\n")
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(asdict(row))
    return buf.getvalue()


@dataclass
class GateCount:
    prime: str
    bits: int
    operation: str
    per_comparison_online: float
    per_comparison_offline: float
    per_comparison_total: float
    online_rounds: int
    reference_formula: int

    @property
    def delta(self) -> float:
        return self.per_comparison_total - self.reference_formula

    @property
    def matches(self) -> bool:
        return self.delta == 0

    def line(self) -> str:
        flag = "matches" if self.matches else f"DIFFERS by {self.delta:+.1f}"
        return (f"{self.operation} {self.prime} (l={self.bits}): measured {self.per_comparison_total:.1f} "
                f"gates/comparison (online {self.per_comparison_online:.1f}, offline "
                f"{self.per_comparison_offline:.1f}, {self.online_rounds} online rounds) vs "
                f"279*l+5 = {self.reference_formula}: {flag}")


def gate_count_report(primes=DEFAULT_PRIMES, n: int = 200, seed: int = 0, D: int = 3) -> list[GateCount]:
    """Measured multiplication counts per comparison next to the quoted formula.

    The implemented circuit is a different construction from the one the
    formula describes, so a nonzero delta is expected and flagged.
    """
    out = []
    for prime in primes:
        f = PrimeModulus.named(prime)
        for full, name in ((False, "less_than"), (True, "less_than_full")):
            _, online, offline = compare_cell(D, prime, seed, n, full=full)
            out.append(GateCount(prime, f.bits, name, online.mult_gates / n, offline.mult_gates / n,
                                 (online.mult_gates + offline.mult_gates) / n, online.rounds,
                                 reference_gate_formula(f.p)))
    return out
