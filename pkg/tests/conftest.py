import pytest

from dyad.core import ModelSpec
from dyad.constructor.solution import construct

ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def forward_solution():
    return construct(ModelSpec.forward(2.0, 2.5), rho=2.0**3.5, j_max=12)


@pytest.fixture(scope="session")
def mixed_solution():
    return construct(ModelSpec.mixed(2.0, 2.5), rho=2.0**3.5, j_max=12)


@pytest.fixture(scope="session")
def fractional_solution():
    return construct(ModelSpec.mhd_fractional(2.0, 0.3, 0.4), j_max=12)


@pytest.fixture(scope="session")
def gnse_solution():
    return construct(ModelSpec.nse_fractional(2.0, 0.4), j_max=12)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
