"""Plaintext semantics of the score-based rules.

Everything here works on ordinary integers and serves as the reference
every secure computation is checked against.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from .errors import ChoiceError, ConfigError, IllegalBallot
from .field import PrimeModulus


class Rule(str, enum.Enum):
    PLURALITY = "plurality"
    RANGE = "range"
    APPROVAL = "approval"
    VETO = "veto"
    BORDA = "borda"

    @classmethod
    def parse(cls, name) -> "Rule":
        if isinstance(name, Rule):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ConfigError(f"unknown rule {name!r}") from None


class TieBreak(str, enum.Enum):
    LOWEST_INDEX = "lowest-index"

    @classmethod
    def parse(cls, name) -> "TieBreak":
        if isinstance(name, TieBreak):
            return name
        key = str(name).strip().lower().replace("_", "-")
        if key in ("lowest-index", "lowestindex", "lowest"):
            return cls.LOWEST_INDEX
        raise ConfigError(f"unknown tie-break policy {name!r}")


def default_names(M: int) -> list[str]:
    width = len(str(M))
    return [f"C{str(i + 1).zfill(width)}" for i in range(M)]


def score_bound(rule: Rule, N: int, M: int, L: int | None = None) -> int:
    """Largest value an aggregated score can reach."""
    rule = Rule.parse(rule)
    if rule in (Rule.PLURALITY, Rule.APPROVAL, Rule.VETO):
        return N
    if rule is Rule.BORDA:
        return N * M
    if L is None:
        raise ConfigError("Range rule needs L")
    return N * L


@dataclass(frozen=True)
class ElectionConfig:
    rule: Rule
    N: int
    M: int
    K: int = 1
    L: int | None = None
    D: int = 3
    modulus: PrimeModulus = field(default_factory=lambda: PrimeModulus((1 << 31) - 1))
    tiebreak: TieBreak = TieBreak.LOWEST_INDEX
    candidate_names: tuple[str, ...] = ()
    threshold: int | None = None

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("rule", Rule.parse(self.rule))
        set_("tiebreak", TieBreak.parse(self.tiebreak))
        if not isinstance(self.modulus, PrimeModulus):
            set_("modulus", PrimeModulus.named(self.modulus))
        if self.M < 2:
            raise ConfigError(f"need at least 2 candidates, got M={self.M}")
        if not 1 <= self.K <= self.M:
            raise ConfigError(f"K={self.K} outside [1, M={self.M}]")
        if self.N < 0:
            raise ConfigError("N must be non-negative")
        if self.D < 2:
            raise ConfigError(f"need at least 2 talliers, got D={self.D}")
        if self.rule is Rule.RANGE:
            if self.L is None or self.L < 1:
                raise ConfigError("Range rule needs L >= 1")
        names = tuple(self.candidate_names) or tuple(default_names(self.M))
        if len(names) != self.M:
            raise ConfigError(f"{len(names)} candidate names for M={self.M}")
        if len(set(names)) != len(names):
            raise ConfigError("candidate names must be distinct")
        set_("candidate_names", tuple(sorted(names)))
        t = (self.D - 1) // 2 if self.threshold is None else self.threshold
        if not 0 <= t <= (self.D - 1) // 2:
            raise ConfigError(f"threshold {t} exceeds honest-majority limit {(self.D - 1) // 2}")
        set_("threshold", t)
        p = self.modulus.p
        B = self.bound
        if p <= B:
            raise ConfigError(f"modulus too small for bound B={B} (p={p})")
        if p <= self.M:
            raise ConfigError(f"modulus must exceed M={self.M}")
        if 2 * B >= p:
            raise ConfigError(f"modulus too small for bound B={B}: secure comparison needs B < p/2")
        if not self.modulus.vectorizable:
            raise ConfigError("modulus too large for 64-bit share arithmetic")

    @property
    def p(self) -> int:
        return self.modulus.p

    @property
    def bound(self) -> int:
        return score_bound(self.rule, self.N, self.M, self.L)

    def with_voters(self, N: int) -> "ElectionConfig":
        return replace_config(self, N=N)

    def to_text(self) -> str:
        lines = [
            f"rule = {self.rule.value}",
            f"N = {self.N}",
            f"M = {self.M}",
            f"K = {self.K}",
        ]
        if self.L is not None:
            lines.append(f"L = {self.L}")
        lines += [
            f"D = {self.D}",
            f"p = {self.p}",
            f"threshold = {self.threshold}",
            f"tiebreak = {self.tiebreak.value}",
            "candidates = " + ",".join(self.candidate_names),
        ]
        return "\n".join(lines) + "\n"


def replace_config(cfg: ElectionConfig, **changes) -> ElectionConfig:
    from dataclasses import replace
    return replace(cfg, **changes)


@dataclass(frozen=True)
class Ballot:
    voter_tag: Hashable
    scores: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(int(s) for s in self.scores))


def make_ballot(config: ElectionConfig, choice, voter_tag: Hashable = None) -> Ballot:
    """Build the canonical ballot for a voter's choice.

    ``choice`` is a favourite index (Plurality), a vetoed index (Veto),
    a score vector (Range), a set of approved indices (Approval) or a
    preference order, most favoured first (Borda).
    """
    M, rule = config.M, config.rule

    def index(c):
        if isinstance(c, bool) or not isinstance(c, int) or not 0 <= c < M:
            raise ChoiceError(f"candidate index {c!r} outside [0, {M})")
        return c

    if rule is Rule.PLURALITY:
        scores = [0] * M
        scores[index(choice)] = 1
    elif rule is Rule.VETO:
        scores = [1] * M
        scores[index(choice)] = 0
    elif rule is Rule.RANGE:
        scores = list(choice)
        if len(scores) != M or any(not isinstance(s, int) or not 0 <= s <= config.L for s in scores):
            raise ChoiceError(f"Range choice must be {M} integers in [0, {config.L}]")
    elif rule is Rule.APPROVAL:
        approved = set(choice)
        for c in approved:
            index(c)
        if len(approved) > config.K:
            raise ChoiceError(f"at most K={config.K} approvals allowed")
        scores = [1 if m in approved else 0 for m in range(M)]
    else:
        order = list(choice)
        if sorted(order) != list(range(M)):
            raise ChoiceError("Borda choice must order every candidate exactly once")
        scores = [0] * M
        for position, m in enumerate(order):
            scores[m] = M - 1 - position
    return Ballot(voter_tag, tuple(scores))


def legality_reason(config: ElectionConfig, scores: Sequence[int]) -> str | None:
    """Return ``None`` for a legal ballot, else a short reason."""
    M, rule = config.M, config.rule
    if len(scores) != M:
        return f"length {len(scores)} != M={M}"
    if any(s < 0 for s in scores):
        return "negative entry"
    binary = all(s in (0, 1) for s in scores)
    if rule is Rule.PLURALITY:
        if not binary:
            return "entry outside {0,1}"
        if sum(scores) != 1:
            return "entries do not sum to 1"
    elif rule is Rule.RANGE:
        if any(s > config.L for s in scores):
            return f"entry above L={config.L}"
    elif rule is Rule.APPROVAL:
        if not binary:
            return "entry outside {0,1}"
        if sum(scores) > config.K:
            return f"more than K={config.K} approvals"
    elif rule is Rule.VETO:
        if not binary:
            return "entry outside {0,1}"
        if sum(scores) != M - 1:
            return f"entries do not sum to M-1={M - 1}"
    else:
        if any(s > M - 1 for s in scores):
            return f"entry above M-1={M - 1}"
        if sorted(scores) != list(range(M)):
            return "entries are not a permutation"
    return None


def is_legal(config: ElectionConfig, ballot: Ballot | Sequence[int]) -> bool:
    scores = ballot.scores if isinstance(ballot, Ballot) else ballot
    return legality_reason(config, list(scores)) is None


def plaintext_tally(config: ElectionConfig, ballots: Iterable[Ballot]) -> list[int]:
    w = [0] * config.M
    for b in ballots:
        if not is_legal(config, b):
            raise IllegalBallot(b.voter_tag, legality_reason(config, list(b.scores)))
        for m, s in enumerate(b.scores):
            w[m] += s
    return w


def plaintext_winners(w: Sequence[int], K: int, tiebreak: TieBreak = TieBreak.LOWEST_INDEX) -> list[int]:
    TieBreak.parse(tiebreak)
    order = sorted(range(len(w)), key=lambda m: (-w[m], m))
    return order[:K]
