import math

import pytest

from scatmono import QuadratureSpec, lorentzian, zero_potential

P_BELOW = math.sqrt(6.0)
P_ABOVE = 7.0
HBAR = 0.25


@pytest.fixture(scope="session")
def pot():
    return lorentzian(20.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def free():
    return zero_potential(1.0)


@pytest.fixture(scope="session")
def quad():
    return QuadratureSpec()


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.VERDICTS):
            terminalreporter.write_line(test_acceptance.VERDICTS[n])
