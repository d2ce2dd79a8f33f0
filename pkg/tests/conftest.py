import numpy as np
import pytest

from lqjumps.norms import SpaceGrid
from lqjumps.random_measure import BernoulliCellsModel, PoissonModel


@pytest.fixture
def poisson_model():
    edges = np.array([0.0, 0.3, 0.7, 1.0])
    rates = np.array([[1.0, 2.0], [0.5, 3.0], [2.0, 1.0]])
    return PoissonModel(edges, rates)


@pytest.fixture
def grid3():
    return SpaceGrid([0.5, 1.0, 2.0])


@pytest.fixture
def bernoulli_model():
    return BernoulliCellsModel([0.1, 0.3, 0.3, 0.6, 0.9], [0.5, 0.2, 0.7, 0.4, 0.9], 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
