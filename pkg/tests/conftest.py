import numpy as np
import pytest

from dmsoliton.averaging import uniform_density
from dmsoliton.grid import Grid
from dmsoliton.nonlinearity import Problem
from dmsoliton.potentials import power

ACCEPTANCE_LINES = []


def record_acceptance(number: int, title: str, ok: bool, detail: str = ""):
    ACCEPTANCE_LINES.append((number, f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}  {detail}".rstrip()))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture(scope="session")
def model_problem():
    return Problem(2.0, 0.0, power(4), uniform_density(0, 1), Grid(1024, 40.0))
