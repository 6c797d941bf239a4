import numpy as np
import pytest

from buridan.hybrid_sim import simulate_line, simulate_polygon
from buridan.markov_core import TauMatrix

ACCEPTANCE_LINES = []

TRIANGLE_TAUS = {(0, 1): 1e-3, (0, 2): 6e-3, (1, 0): 2e-3, (1, 2): 3e-3, (2, 0): 4e-3, (2, 1): 5e-3}


@pytest.fixture(scope="session")
def triangle_tau():
    return TauMatrix(3, TRIANGLE_TAUS)


@pytest.fixture(scope="session")
def line_traj():
    return simulate_line(TauMatrix.two_state(0.05, 0.08), v=0.1, n_steps=10_000, seed=7)


@pytest.fixture(scope="session")
def triangle_traj(triangle_tau):
    return simulate_polygon(triangle_tau, v=0.01, n_steps=10_000, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
