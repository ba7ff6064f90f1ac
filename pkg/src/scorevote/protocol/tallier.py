"""Tallier side: collect shares, reconcile, validate, aggregate and select."""

from __future__ import annotations

import contextlib
import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import AbortError, ChannelError, EmptyElection, ProtocolFailure
from ..mpc.comparison import less_than, lsb_available, preprocess_lsb
from ..mpc.engine import Engine, SharedValue
from ..net.wire import Kind, Message, decode_ids, encode_ids
from ..rules import ElectionConfig
from .validation import Verdict, validate_ballots


@contextlib.contextmanager
def phase_tag(phase: str):
    """Attach ``phase`` to protocol failures raised without one."""
    try:
        yield
    except ProtocolFailure as exc:
        if exc.phase is None:
            raise type(exc)(str(exc), phase) from exc
        raise


def comparisons_needed(M: int, K: int) -> int:
    """Comparisons made by the K-pass argmax scan."""
    return K * (2 * M - K - 1) // 2


@dataclass
class Outcome:
    """What one tallier concludes; all honest talliers agree on it."""
    winners: list[int]
    verdicts: dict[int, Verdict]
    evidence: dict[int, tuple[int, ...]] = field(default_factory=dict)


class Tallier:
    def __init__(self, engine: Engine, config: ElectionConfig, roll: dict[int, str]):
        self.engine = engine
        self.config = config
        self.roll = roll            # voter party id -> voter tag
        self.received: dict[int, tuple[int, np.ndarray]] = {}
        self.duplicates = 0
        self.voters: list[int] = []
        self.aggregate_share: np.ndarray | None = None

    @property
    def party(self) -> int:
        return self.engine.party

    # -- submission window -------------------------------------------------------

    async def serve(self) -> None:
        """Accept voter shares until :meth:`close_window`; first submission wins."""
        ep = self.engine.net
        M = self.config.M
        while True:
            msg = await ep.next(Kind.SHARE)
            if msg is None:
                return
            voter = msg.sender
            if voter not in self.roll:
                continue
            try:
                entries = ep.array(msg.payload)
            except ChannelError:
                continue
            if entries.shape != (M,):
                continue
            held = self.received.get(voter)
            if held is None:
                self.received[voter] = (msg.round, entries.copy())
                nonce = msg.round
            else:
                nonce = held[0]
                if nonce != msg.round:
                    self.duplicates += 1
            await ep.send(voter, Message(Kind.ACK, self.party, nonce, b""))

    def close_window(self) -> None:
        self.engine.net.end_stream(Kind.SHARE)

    # -- tallying ----------------------------------------------------------------

    async def reconcile(self) -> list[int]:
        """Agree on the voter set: intersect everyone's list, then compare digests."""
        eng = self.engine
        mine = encode_ids(sorted(self.received))
        lists = await eng.exchange_bytes(Kind.VOTERSET, mine, "voter-set")
        common = set(self.received)
        for raw in lists:
            common &= set(decode_ids(raw))
        voters = sorted(common)
        digest = hashlib.sha256(encode_ids(voters)).digest()
        digests = await eng.exchange_bytes(Kind.DIGEST, digest, "voter-set-digest")
        if any(d != digest for d in digests):
            raise AbortError("talliers disagree on the voter set")
        dropped = len(self.received) - len(voters)
        eng.transcript.event(f"voters agreed={len(voters)} dropped={dropped} duplicates={self.duplicates}")
        self.voters = voters
        return voters

    def share_matrix(self, voters: list[int]) -> np.ndarray:
        M = self.config.M
        if not voters:
            return np.zeros((0, M), dtype=np.int64)
        return np.stack([self.received[v][1] for v in voters])

    async def validate(self) -> dict[int, Verdict]:
        eng = self.engine
        local = self.share_matrix(self.voters)
        X = await eng.reshare_sum(local, "reshare-ballots")
        verdicts = await validate_ballots(eng, self.config, X)
        return dict(zip(self.voters, verdicts))

    async def recover_evidence(self, rejected: list[int]) -> dict[int, tuple[int, ...]]:
        """Pool additive shares of rejected ballots; needs every tallier."""
        eng = self.engine
        if not rejected:
            return {}
        f = eng.modulus
        got = await eng.exchange(Kind.EVIDENCE, self.share_matrix(rejected), "evidence")
        ballots = f.signed(f.sum(np.stack(got), axis=0))
        eng.transcript.event(f"evidence reconstructed by all {eng.D} talliers for {len(rejected)} voter(s)")
        out = {}
        for v, row in zip(rejected, ballots):
            out[v] = tuple(int(x) for x in row)
            eng.transcript.record_evidence(self.roll[v], out[v])
        return out

    def aggregate(self, accepted: list[int]) -> np.ndarray:
        """This tallier's additive share of the tally over ``accepted`` voters."""
        if not accepted:
            raise EmptyElection("no accepted ballots")
        f = self.engine.modulus
        self.aggregate_share = f.sum(self.share_matrix(accepted), axis=0)
        return self.aggregate_share

    async def tally(self, validate: bool = True) -> Outcome:
        with phase_tag("reconcile"):
            voters = await self.reconcile()
        verdicts = {v: Verdict(True) for v in voters}
        evidence: dict[int, tuple[int, ...]] = {}
        if validate and voters:
            with phase_tag("validate"):
                verdicts = await self.validate()
                rejected = [v for v in voters if not verdicts[v].accepted]
                evidence = await self.recover_evidence(rejected)
        accepted = [v for v in voters if verdicts[v].accepted]
        with phase_tag("aggregate"):
            local = self.aggregate(accepted)
        with phase_tag("reshare"):
            w = await reshare_to_threshold(self.engine, local)
        with phase_tag("select"):
            winners = await select_top_k(self.engine, w, self.config.K)
        self.engine.transcript.event("output winners=" + ",".join(map(str, winners)))
        return Outcome(winners, verdicts, evidence)


async def reshare_to_threshold(eng: Engine, aggregate_share) -> SharedValue:
    """Degree-t sharing of the tally from additive per-tallier aggregates."""
    return await eng.reshare_sum(aggregate_share, "reshare-tally")


async def select_top_k(eng: Engine, w: SharedValue, K: int) -> list[int]:
    """K passes of secure argmax; strict comparison keeps the lower index on ties."""
    M = w.shape[0]
    if not 1 <= K <= M:
        raise ValueError(f"K={K} outside [1, {M}]")
    need = comparisons_needed(M, K) - lsb_available(eng)
    if need > 0:
        await preprocess_lsb(eng, need)
    remaining = list(range(M))
    winners: list[int] = []
    for _ in range(K):
        best = remaining[0]
        for m in remaining[1:]:
            bit = await eng.open(await less_than(eng, w[best], w[m]), "comparison", f"w{best}<w{m}")
            if int(bit) == 1:
                best = m
        winners.append(best)
        remaining.remove(best)
    return winners
