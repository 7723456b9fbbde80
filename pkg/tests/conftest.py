import numpy as np
import pytest

from nkpc.models import DesignMatrix
from nkpc.quarters import QuarterIndex, Series, quarter_range
from nkpc.synth import synth_dgp


@pytest.fixture(scope="session")
def synth_data():
    return synth_dgp(42, 120)


@pytest.fixture()
def q0():
    return QuarterIndex(2000, 1)


def make_series(values, name="x", start=QuarterIndex(2000, 1), units=""):
    values = np.asarray(values, dtype=float)
    return Series(name, quarter_range(start, len(values)), values, units)


@pytest.fixture()
def linear_design():
    """80 rows, 6 features, exact linear target (no noise)."""
    rng = np.random.default_rng(7)
    X = rng.normal(size=(80, 6))
    beta = np.array([1.5, -2.0, 0.5, 0.0, 3.0, -0.7])
    y = 4.0 + X @ beta
    names = tuple(f"x{j}" for j in range(6))
    return DesignMatrix(names, X, y), beta, 4.0


@pytest.fixture()
def noisy_design():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(60, 4))
    beta = np.array([2.0, -1.0, 0.0, 0.5])
    y = 1.0 + X @ beta + 0.3 * rng.normal(size=60)
    return DesignMatrix(tuple(f"x{j}" for j in range(4)), X, y)


# Acceptance criteria report their one-line verdicts here; the hook echoes
# them after the test summary so they survive output capturing.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
