"""Shared grids and states."""

import numpy as np
import pytest

from bridgelab.grid import Grid1D
from bridgelab.state import HydroState


@pytest.fixture(scope="session")
def periodic_grid():
    return Grid1D.periodic(-20.0, 20.0, 512)


@pytest.fixture(scope="session")
def closed_grid():
    return Grid1D.closed(-10.0, 10.0, 401)


@pytest.fixture(scope="session")
def gaussian_state(periodic_grid):
    return HydroState.gaussian(periodic_grid, 1.0)


@pytest.fixture(scope="session")
def moving_state(periodic_grid):
    return HydroState.gaussian(periodic_grid, 1.0, p0=1.0, chirp=0.1)


@pytest.fixture(scope="session")
def mixture_state(periodic_grid):
    x = periodic_grid.points
    rho = 0.6 * np.exp(-((x + 1.0) ** 2) / 1.2) + 0.4 * np.exp(-((x - 1.5) ** 2) / 3.0)
    s = (0.7 * x - 0.3 * x**2) * np.exp(-(x**2) / 8.0)
    return HydroState.from_arrays(periodic_grid, rho, s)
