"""Command-line driver.

Every option can also be set through an environment variable named
``SCOREVOTE_<COMMAND>_<OPTION>``, e.g. ``SCOREVOTE_RUN_SEED=7``.

Exit codes: 0 success, 2 bad input (parse or config errors), 3 protocol abort.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import bench as benchmod
from .errors import ChoiceError, ConfigError, ParseError, ProtocolFailure
from .gen import generate_ballots
from .io import format_ballots, load_ballots, load_config, parse_config
from .protocol.election import run_election

EXIT_INPUT = 2
EXIT_ABORT = 3


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@click.group(context_settings={"auto_envvar_prefix": "SCOREVOTE"})
def main():
    """Secret-shared score-based elections."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--ballots", "ballots_path", required=True, type=click.Path(dir_okay=False))
@click.option("--mode", type=click.Choice(["simulate", "network"]), default="simulate", show_default=True)
@click.option("--talliers", type=int, default=None, help="Override the tallier count D.")
@click.option("--prime", type=click.Choice(["p13", "p31"]), default=None, help="Override the field.")
@click.option("--seed", type=int, default=None, help="Fix all randomness (reproducible transcripts).")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the report here.")
@click.option("--transcript", type=click.Path(dir_okay=False), default=None,
              help="Write the per-tallier transcripts here.")
def run(config_path, ballots_path, mode, talliers, prime, seed, out, transcript):
    """Run an election from a config file and a ballot file."""
    try:
        ballots = load_ballots(ballots_path)
        voters = len({b.voter_tag for b in ballots})
        config = load_config(config_path, {"N": voters}, D=talliers, modulus=prime)
        for b in ballots:
            if len(b.scores) != config.M:
                raise ParseError(f"voter {b.voter_tag}: {len(b.scores)} scores, expected M={config.M}")
        result = run_election(config, ballots, mode=mode, seed=seed)
    except (ParseError, ConfigError, ChoiceError) as exc:
        _fail(str(exc), EXIT_INPUT)
    except ProtocolFailure as exc:
        _fail(f"election aborted: {exc}", EXIT_ABORT)
    _emit(result.report(), out)
    if transcript:
        Path(transcript).write_text(result.transcript_text())


@main.command()
@click.option("--rule", required=True)
@click.option("-N", "--voters", "N", type=int, required=True)
@click.option("-M", "--candidates", "M", type=int, required=True)
@click.option("-K", "--winners", "K", type=int, default=1, show_default=True)
@click.option("-L", "--max-score", "L", type=int, default=None)
@click.option("--talliers", type=int, default=3, show_default=True)
@click.option("--prime", type=click.Choice(["p13", "p31"]), default="p31", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--adversarial", type=float, default=0.0, show_default=True,
              help="Fraction of ballots replaced by illegal ones.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Ballot file to write.")
@click.option("--config-out", type=click.Path(dir_okay=False), default=None,
              help="Also write the matching config file.")
def gen(rule, N, M, K, L, talliers, prime, seed, adversarial, out, config_out):
    """Generate a deterministic synthetic electorate."""
    try:
        text = f"rule = {rule}\nN = {N}\nM = {M}\nK = {K}\nD = {talliers}\np = {prime}\n"
        if L is not None:
            text += f"L = {L}\n"
        config = parse_config(text)
        ballots = generate_ballots(config, seed, adversarial)
    except (ParseError, ConfigError, ChoiceError, ValueError) as exc:
        _fail(str(exc), EXIT_INPUT)
    if config_out:
        Path(config_out).write_text(config.to_text())
    _emit(format_ballots(ballots), out)


def _int_list(ctx, param, value):
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected a comma-separated list of integers") from None


def _prime_list(ctx, param, value):
    primes = [v.strip() for v in value.split(",") if v.strip()]
    bad = [v for v in primes if v not in ("p13", "p31")]
    if bad:
        raise click.BadParameter(f"unknown prime(s) {', '.join(bad)}")
    return primes


@main.command()
@click.option("--suite", type=click.Choice(benchmod.SUITES), default="compare", show_default=True)
@click.option("--talliers", default="3,5,7,9", show_default=True, callback=_int_list)
@click.option("--prime", "primes", default="p13,p31", show_default=True, callback=_prime_list)
@click.option("--reps", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mode", type=click.Choice(["simulate", "network"]), default="simulate", show_default=True)
@click.option("-n", "--comparisons", "n", type=int, default=100, show_default=True,
              help="Batch size of the compare suite.")
@click.option("--gate-report", is_flag=True, help="Append the gate-count comparison as comments.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV file to write.")
def bench(suite, talliers, primes, reps, seed, mode, n, gate_report, out):
    """Run a benchmark suite and print CSV."""
    if any(d < 2 for d in talliers) or reps < 1 or n < 1:
        _fail("talliers must be >= 2, reps and batch size >= 1", EXIT_INPUT)
    rows = benchmod.run_suite(suite, talliers, primes, reps, seed, mode, n)
    text = benchmod.to_csv(rows, benchmod.environment())
    if gate_report:
        text += "".join(f"# {g.line()}\n" for g in benchmod.gate_count_report(primes, seed=seed))
    _emit(text, out)


if __name__ == "__main__":  # pragma: no cover
    main()
