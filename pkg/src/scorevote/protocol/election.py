"""End-to-end election: voters submit, talliers validate and select winners."""

from __future__ import annotations

import asyncio
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import AbortError, ConfigError
from ..field import RandomSource
from ..mpc.dealer import TripleDealer
from ..mpc.engine import Engine
from ..mpc.sim import session_id
from ..mpc.stats import DISCLOSURE_CATEGORIES, CircuitStats, Transcript
from ..net.tcp import TcpNetwork
from ..net.transport import MemoryNetwork, TamperHook
from ..net.wire import KeyRing
from ..rules import Ballot, ElectionConfig
from .tallier import Outcome, Tallier
from .voter import Confirmation, voter_submit

MODES = ("simulate", "network")


@dataclass
class Faults:
    """Fault injection for tests: frame tampering and a crashed tallier."""
    tamper: TamperHook | None = None
    crash_tallier: int | None = None
    voter_retries: int = 3
    ack_timeout: float = 0.25


@dataclass
class VoterReport:
    voter_tag: str
    accepted: bool
    reason: str | None = None
    evidence: tuple[int, ...] | None = None
    confirmation: Confirmation | None = None


@dataclass
class ElectionResult:
    config: ElectionConfig
    winners: list[int]
    winner_names: list[str]
    voters: dict[str, VoterReport]
    stats: list[dict[str, CircuitStats]]
    transcripts: list[Transcript]
    unconfirmed: list[str] = field(default_factory=list)

    @property
    def accepted(self) -> list[str]:
        return [t for t, r in self.voters.items() if r.accepted]

    @property
    def rejected(self) -> list[str]:
        return [t for t, r in self.voters.items() if not r.accepted]

    def summary(self) -> str:
        lines = ["winners: " + ", ".join(f"{n} (index {i})" for i, n in zip(self.winners, self.winner_names))]
        lines.append(f"ballots: {len(self.accepted)} accepted, {len(self.rejected)} rejected")
        for tag in self.rejected:
            r = self.voters[tag]
            shown = ",".join(map(str, r.evidence)) if r.evidence is not None else "?"
            lines.append(f"  rejected {tag}: {r.reason} (recovered ballot {shown})")
        for tag in self.unconfirmed:
            lines.append(f"  unconfirmed {tag}")
        return "\n".join(lines) + "\n"

    def report(self) -> str:
        """Summary plus per-tallier cost counters (no timings)."""
        out = [self.summary().rstrip("\n")]
        for d, st in enumerate(self.stats, 1):
            for ph in ("offline", "online"):
                s = st[ph]
                out.append(f"tallier {d} {ph}: gates={s.mult_gates} rounds={s.rounds} "
                           f"mult_rounds={s.mult_rounds} bytes={s.bytes_sent} opened={s.opened}")
        return "\n".join(out) + "\n"

    def transcript_text(self) -> str:
        return "".join(t.render() for t in self.transcripts)


def audit_disclosures(transcripts: Sequence[Transcript]) -> list[str]:
    """Problems found in the opening log; an empty list means the audit passed.

    Comparison openings must be bits, validation openings are verdict
    material, and no raw score may be opened as an output.
    """
    problems = []
    for tr in transcripts:
        for d in tr.disclosures:
            if d.category not in DISCLOSURE_CATEGORIES:
                problems.append(f"tallier {tr.party}: undeclared category {d.category!r} ({d.label})")
            elif d.category == "comparison" and not set(d.values) <= {0, 1}:
                problems.append(f"tallier {tr.party}: non-bit comparison opening {d.label}")
    return problems


def _check_inputs(config: ElectionConfig, ballots: Sequence[Ballot], mode: str) -> list[str]:
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    tags = list(dict.fromkeys(str(b.voter_tag) for b in ballots))
    if len(tags) > config.N:
        raise ConfigError(f"{len(tags)} distinct voters exceed N={config.N}")
    for b in ballots:
        if len(b.scores) != config.M:
            raise ConfigError(f"ballot of voter {b.voter_tag!r} has {len(b.scores)} entries, M={config.M}")
    return tags


async def _run(config: ElectionConfig, ballots: Sequence[Ballot], mode: str, seed,
               faults: Faults, validate: bool, timeout: float | None):
    tags = _check_inputs(config, ballots, mode)
    D, f = config.D, config.modulus
    root = RandomSource(seed)
    key_rng, dealer_rng, session_rng, tallier_root, voter_root = root.spawn(5)
    tallier_rngs = tallier_root.spawn(D)
    voter_rngs = voter_root.spawn(len(ballots))
    session = session_id("election", config.to_text(), tags, session_rng.bytes(16))
    keys = KeyRing(key_rng.bytes(32))
    roll = {D + 1 + i: tag for i, tag in enumerate(tags)}
    party_of = {tag: p for p, tag in roll.items()}

    if mode == "network":
        net = TcpNetwork(session, keys, f)
        for party in list(range(1, D + 1)) + list(roll):
            await net.listen(party)
    else:
        net = MemoryNetwork(session, keys, f, tamper=faults.tamper)

    dealer = TripleDealer(f, D, config.threshold, dealer_rng)
    talliers = [
        Tallier(Engine(d, D, config.threshold, f, net.endpoint(d), tallier_rngs[d - 1], dealer,
                       session=session, timeout=timeout), config, roll)
        for d in range(1, D + 1)
    ]
    try:
        servers = [asyncio.create_task(t.serve()) for t in talliers]
        confirmations: dict[str, Confirmation] = {}
        for ballot, rng in zip(ballots, voter_rngs):
            tag = str(ballot.voter_tag)
            ep = net.endpoint(party_of[tag])
            conf = await voter_submit(config, ballot, rng, ep, check_legal=False,
                                      retries=faults.voter_retries, timeout=faults.ack_timeout)
            confirmations.setdefault(tag, conf)
        for t in talliers:
            t.close_window()
        await asyncio.gather(*servers)

        if faults.crash_tallier is not None:
            net.crash(faults.crash_tallier)
        live = [t for t in talliers if not net.is_down(t.party)]
        outcomes: list[Outcome] = await asyncio.gather(*(t.tally(validate) for t in live))
    finally:
        await net.close()

    first = outcomes[0]
    for o in outcomes[1:]:
        if o.winners != first.winners or o.verdicts != first.verdicts:
            raise AbortError("talliers reached different outcomes", phase="output")

    reports: dict[str, VoterReport] = {}
    for party, tag in roll.items():
        verdict = first.verdicts.get(party)
        if verdict is None:
            continue
        reports[tag] = VoterReport(tag, verdict.accepted, verdict.reason,
                                   first.evidence.get(party), confirmations.get(tag))
    unconfirmed = [tag for tag in tags if tag not in reports]
    names = [config.candidate_names[i] for i in first.winners]
    return ElectionResult(config, first.winners, names, reports,
                          [t.engine.snapshot() for t in talliers],
                          [t.engine.transcript for t in talliers], unconfirmed)


def run_election(config: ElectionConfig, ballots: Sequence[Ballot], mode: str = "simulate",
                 seed=None, faults: Faults | None = None, validate: bool = True,
                 timeout: float | None = 60.0) -> ElectionResult:
    """Run a whole election and return the winners with the validation report.

    Ballots are submitted without the honest-client legality check, so
    illegal ballots exercise the talliers' validation.
    """
    return asyncio.run(_run(config, ballots, mode, seed, faults or Faults(), validate, timeout))

