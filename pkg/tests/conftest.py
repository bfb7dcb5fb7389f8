import numpy as np
import pytest

from dpwave.grids import Grid, LINE, PERIODIC
from dpwave.steady import SolveConfig, WaveProfile, peakon, solve_newton


@pytest.fixture(scope="session")
def line_grid():
    return Grid(LINE, 4096, 30.0)


@pytest.fixture(scope="session")
def line_peakon(line_grid):
    return peakon(1.0, 0.0, line_grid)


@pytest.fixture(scope="session")
def periodic_40():
    return Grid(PERIODIC, 1024, 20.0)


@pytest.fixture(scope="session")
def periodic_80():
    return Grid(PERIODIC, 2048, 40.0)


@pytest.fixture(scope="session")
def periodic_8():
    return Grid(PERIODIC, 1024, 4.0)


def _solve_pinned(grid, mu, guess_kind="peakon"):
    x = grid.nodes()
    if guess_kind == "peakon":
        guess = mu * np.exp(-np.abs(x))
    else:
        guess = mu * (0.5 * (1.0 + np.cos(np.pi * x / grid.half_length))) ** 2
    init = WaveProfile(grid, guess, 1.0)
    return solve_newton(init, SolveConfig(amplitude_mu=mu, residual_tol=1e-12,
                                          max_iter=200))


@pytest.fixture(scope="session")
def solved_40(periodic_40):
    """Near-peaked family member, period 40, crest height 0.5."""
    return _solve_pinned(periodic_40, 0.5)


@pytest.fixture(scope="session")
def solved_80(periodic_80):
    """Long-period profile used for tail-decay diagnostics."""
    return _solve_pinned(periodic_80, 0.5)


@pytest.fixture(scope="session")
def solved_smooth(periodic_8):
    """Spectrally clean short-period profile used for evolution runs."""
    return _solve_pinned(periodic_8, 0.5, guess_kind="bump")


@pytest.fixture(scope="session")
def solved_line():
    """Truncated-line solve at fixed speed (collapses to the peaked family)."""
    grid = Grid(LINE, 2048, 30.0)
    init = WaveProfile(grid, 0.5 * np.exp(-np.abs(grid.nodes())), 0.5)
    return solve_newton(init, SolveConfig(residual_tol=1e-8, max_iter=100))
