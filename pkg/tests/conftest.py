import pytest

from expinv.bernoulli import bernoulli_numbers
from expinv.expsum import build_quadrature, select_params

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def table():
    return bernoulli_numbers(256)


@pytest.fixture(scope="session")
def quad_01_001():
    return build_quadrature(select_params(0.1, 0.01))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
