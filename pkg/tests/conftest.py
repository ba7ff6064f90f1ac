import pytest

from scorevote.field import P13, P31, PrimeModulus
from scorevote.mpc.sim import make_engines, run_parties


@pytest.fixture(params=["p13", "p31"])
def modulus(request):
    return PrimeModulus.named(request.param)


@pytest.fixture
def f13():
    return PrimeModulus(P13)


@pytest.fixture
def f31():
    return PrimeModulus(P31)


def run_mpc(fn, D=3, modulus=None, seed=0, **kw):
    """Run ``fn(engine)`` on D fresh engines; returns per-party results and engines."""
    modulus = modulus or PrimeModulus(P31)
    engines = make_engines(D, modulus, seed=seed, **kw)
    return run_parties(engines, fn), engines


ACCEPTANCE: list[str] = []


def record(number: int, name: str, ok: bool, detail: str = "") -> bool:
    """Log one acceptance verdict line; printed again in the terminal summary."""
    line = f"criterion {number} {name}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
    print(line)
    ACCEPTANCE.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
