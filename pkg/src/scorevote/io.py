"""Text formats: ``key = value`` election configs and ``tag;s1,...,sM`` ballots."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

from .errors import ParseError
from .rules import Ballot, ElectionConfig

_INT_KEYS = {"n": "N", "m": "M", "k": "K", "l": "L", "d": "D", "threshold": "threshold"}
_KNOWN = set(_INT_KEYS) | {"rule", "p", "prime", "tiebreak", "candidates"}


def _pairs(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        yield lineno, key.lower(), value


def parse_config(text: str, defaults: dict | None = None, **overrides) -> ElectionConfig:
    """Build a config from ``key = value`` lines.

    ``defaults`` fill keys the file leaves out; non-None ``overrides`` win
    over the file.
    """
    fields: dict = dict(defaults or {})
    for lineno, key, value in _pairs(text):
        if key not in _KNOWN:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
        if key in _INT_KEYS:
            try:
                fields[_INT_KEYS[key]] = int(value)
            except ValueError:
                raise ParseError(f"line {lineno}: {key} must be an integer, got {value!r}") from None
        elif key in ("p", "prime"):
            fields["modulus"] = value
        elif key == "candidates":
            fields["candidate_names"] = tuple(n.strip() for n in value.split(",") if n.strip())
        else:
            fields[key] = value
    fields.update({k: v for k, v in overrides.items() if v is not None})
    for required in ("rule", "N", "M"):
        if required not in fields:
            raise ParseError(f"config is missing {required!r}")
    try:
        return ElectionConfig(**fields)
    except ValueError as exc:  # bad enum names
        raise ParseError(str(exc)) from None


def format_config(config: ElectionConfig) -> str:
    return config.to_text()


def parse_ballots(text: str, M: int | None = None) -> list[Ballot]:
    ballots = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tag, sep, body = line.partition(";")
        if not sep or not tag.strip():
            raise ParseError(f"line {lineno}: expected 'voter_tag;s1,...,sM'")
        try:
            scores = tuple(int(s) for s in body.split(","))
        except ValueError:
            raise ParseError(f"line {lineno}: scores must be decimal integers") from None
        if M is not None and len(scores) != M:
            raise ParseError(f"line {lineno}: {len(scores)} scores, expected M={M}")
        ballots.append(Ballot(tag.strip(), scores))
    return ballots


def format_ballots(ballots: Iterable[Ballot]) -> str:
    return "".join(f"{b.voter_tag};{','.join(map(str, b.scores))}\n" for b in ballots)


def load_config(path, defaults: dict | None = None, **overrides) -> ElectionConfig:
    return parse_config(_read(path), defaults, **overrides)


def load_ballots(path, M: int | None = None) -> list[Ballot]:
    return parse_ballots(_read(path), M)


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
