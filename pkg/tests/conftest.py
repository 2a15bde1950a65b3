import sys
import numpy as np
import pytest

from landau_fisher.grid import Density, make_grid


def maxwellian_values(grid, mass=1.0, T=1.0, mean=(0.0, 0.0, 0.0)):
    d = grid.mesh - np.asarray(mean, dtype=float)[:, None, None, None]
    return mass * (2 * np.pi * T) ** -1.5 * np.exp(-np.sum(d * d, axis=0) / (2 * T))


def maxwellian(n, L, mass=1.0, T=1.0, mean=(0.0, 0.0, 0.0)):
    g = make_grid(n, L)
    return Density(g, maxwellian_values(g, mass, T, mean))


@pytest.fixture(scope="session")
def wide_maxwellian():
    """Unit Maxwellian on the n=32, L=8 equilibrium grid."""
    return maxwellian(32, 8.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
