import pytest

from prwlab import laws
from prwlab.laws import JointLaw


def two_point_law(p_up=0.8, eta=None):
    xi = laws.two_point([-1.0, 1.0], [1.0 - p_up, p_up])
    return JointLaw.independent(xi, eta or laws.exponential(1.0))


@pytest.fixture
def two_point():
    return two_point_law()


@pytest.fixture
def symmetric():
    return two_point_law(0.5)


@pytest.fixture
def normal_law():
    return JointLaw.independent(laws.normal(1.0, 1.0), laws.exponential(1.0))


@pytest.fixture
def exp_exp():
    return JointLaw.independent(laws.exponential(1.0), laws.exponential(1.0))


# one pass/fail line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
