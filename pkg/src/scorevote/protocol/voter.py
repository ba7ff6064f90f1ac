"""Voter side: share a ballot and deliver one share to each tallier."""

from __future__ import annotations

import asyncio
import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import ChannelError, ChoiceError, SubmitTimeout
from ..field import RandomSource
from ..net.transport import Endpoint
from ..net.wire import Kind, Message
from ..rules import Ballot, ElectionConfig, legality_reason
from ..sharing import additive_share_array


class Receipt(str, enum.Enum):
    CONFIRMED = "confirmed"
    DUPLICATE = "duplicate"   # tallier already holds an earlier submission


@dataclass
class Confirmation:
    voter_tag: str
    nonce: int
    receipts: dict[int, Receipt] = field(default_factory=dict)
    attempts: int = 0

    @property
    def confirmed(self) -> bool:
        return bool(self.receipts) and all(r is Receipt.CONFIRMED for r in self.receipts.values())


async def voter_submit(config: ElectionConfig, ballot: Ballot, rng: RandomSource, endpoint: Endpoint,
                       talliers: list[int] | None = None, *, check_legal: bool = True,
                       retries: int = 3, timeout: float = 0.25,
                       nonce: int | None = None) -> Confirmation:
    """Send ``ballot``'s additive shares, resending until every tallier acknowledges.

    Resends reuse the nonce, so talliers treat them idempotently.
    """
    if check_legal:
        reason = legality_reason(config, list(ballot.scores))
        if reason:
            raise ChoiceError(f"refusing to submit illegal ballot: {reason}")
    talliers = list(range(1, config.D + 1)) if talliers is None else talliers
    f = config.modulus
    scores = np.array([s % f.p for s in ballot.scores], dtype=np.int64)
    shares = additive_share_array(scores, config.D, f, rng)
    nonce = rng.randbelow(1 << 32) if nonce is None else nonce
    conf = Confirmation(str(ballot.voter_tag), nonce)
    pending = set(talliers)
    rejected_before = endpoint.rejected_frames
    loop = asyncio.get_running_loop()
    while pending and conf.attempts <= retries:
        conf.attempts += 1
        for d in sorted(pending):
            await endpoint.send(d, Message(Kind.SHARE, endpoint.party, nonce, shares[d - 1]))
        deadline = loop.time() + timeout
        while pending:
            remaining = deadline - loop.time()
            if remaining <= 0:
                break
            try:
                ack = await endpoint.next(Kind.ACK, remaining)
            except asyncio.TimeoutError:
                break
            if ack.sender in pending:
                conf.receipts[ack.sender] = Receipt.CONFIRMED if ack.round == nonce else Receipt.DUPLICATE
                pending.discard(ack.sender)
    if pending:
        missing = ", ".join(map(str, sorted(pending)))
        if endpoint.rejected_frames > rejected_before:
            raise ChannelError(f"unverifiable confirmations from tallier(s) {missing}")
        raise SubmitTimeout(f"no confirmation from tallier(s) {missing}", phase="submit")
    return conf
