"""Cost accounting and the per-tallier transcript."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass
class CircuitStats:
    mult_gates: int = 0
    rounds: int = 0
    mult_rounds: int = 0
    bytes_sent: int = 0
    opened: int = 0

    def copy(self) -> "CircuitStats":
        return CircuitStats(**asdict(self))

    def __add__(self, other: "CircuitStats") -> "CircuitStats":
        return CircuitStats(*(a + b for a, b in zip(astuple(self), astuple(other))))

    def __sub__(self, other: "CircuitStats") -> "CircuitStats":
        return CircuitStats(*(a - b for a, b in zip(astuple(self), astuple(other))))

    def as_dict(self) -> dict:
        return asdict(self)


def astuple(s: CircuitStats) -> tuple:
    return (s.mult_gates, s.rounds, s.mult_rounds, s.bytes_sent, s.opened)


# Categories a public opening may carry.  Anything else is a protocol bug.
DISCLOSURE_CATEGORIES = frozenset({"comparison", "validation", "output"})


@dataclass
class Disclosure:
    round: int
    category: str
    label: str
    values: tuple[int, ...]


@dataclass
class Transcript:
    party: int
    lines: list[str] = field(default_factory=list)
    disclosures: list[Disclosure] = field(default_factory=list)
    evidence: list[tuple[str, tuple[int, ...]]] = field(default_factory=list)

    def event(self, text: str) -> None:
        self.lines.append(text)

    def disclose(self, d: Disclosure) -> None:
        self.disclosures.append(d)
        shown = ",".join(str(v) for v in d.values)
        self.lines.append(f"r={d.round} disclose {d.category} {d.label} [{shown}]")

    def record_evidence(self, voter_tag: str, ballot) -> None:
        ballot = tuple(int(v) for v in ballot)
        self.evidence.append((voter_tag, ballot))
        self.lines.append(f"evidence voter={voter_tag} ballot={','.join(map(str, ballot))}")

    def render(self) -> str:
        return "\n".join([f"# tallier {self.party}"] + self.lines) + "\n"
