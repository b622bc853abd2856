import numpy as np
import pytest

from wildeuler.fields import FlowState, TorusGrid
from wildeuler.pressure import gamma_law
from wildeuler.solver import SolverConfig, solve_smooth

ACOUSTIC_AMP = 1e-4


def acoustic_exact(grid, t, amp=ACOUSTIC_AMP):
    """Linear wave solution for p = rho², rho = 1 + amp cos(pi x1), m = 0 at t = 0."""
    c = np.sqrt(2.0)
    x1 = grid.x[0]
    rho = 1.0 + amp * np.cos(np.pi * x1) * np.cos(c * np.pi * t)
    m = np.zeros((grid.d,) + grid.shape)
    m[0] = amp * c * np.sin(np.pi * x1) * np.sin(c * np.pi * t)
    return rho, m


@pytest.fixture(scope="session")
def law():
    return gamma_law(1.0, 2.0)


@pytest.fixture(scope="session")
def acoustic_run(law):
    grid = TorusGrid(2, 128)
    rho, m = acoustic_exact(grid, 0.0)
    return solve_smooth(FlowState(grid, rho, m), law, SolverConfig(t_end=0.2))


@pytest.fixture(scope="session")
def bump_run(law):
    grid = TorusGrid(2, 64)
    r2 = np.sum(grid.x ** 2, axis=0)
    rho = 1.0 + 0.5 * np.exp(-r2 / (2 * 0.25 ** 2))
    return solve_smooth(FlowState(grid, rho, np.zeros((2,) + grid.shape)), law,
                        SolverConfig(t_end=0.1))


@pytest.fixture(scope="session")
def constant_run(law):
    grid = TorusGrid(2, 16)
    return solve_smooth(FlowState.constant(grid, 1.0, (1.0, 0.0)), law, SolverConfig(t_end=1.0))



ACCEPTANCE = {}  # criterion number -> list of result lines


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            for line in ACCEPTANCE[k]:
                terminalreporter.write_line(line)
