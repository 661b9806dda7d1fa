import numpy as np
import pytest

from swipt_harq import IID, Correlated, SystemParams


def iid(E_d, e, R0, R1, lam):
    return SystemParams(E_d, e, float(R0), float(R1), IID(lam))


def corr(E_d, e, R0, R1, lam0, lam1):
    return SystemParams(E_d, e, float(R0), float(R1), Correlated(lam0, lam1))


def small_instances():
    """Every (E_d, e, R0, R1) with E_d <= 3, e <= 2 and n_units <= 3."""
    out = []
    for E_d in (1, 2, 3):
        for e in (1, 2):
            for R0, R1 in ((1, 1), (1, 2), (1, 3), (2, 3), (1.5, 4), (2, 6)):
                out.append((E_d, e, R0, R1))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, passed: bool, text: str) -> None:
    line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
