"""Free-particle unitary evolution on periodic grids.

The free Hamiltonian is diagonal in Fourier space, so every step is an exact
exponentiation; the only errors are spectral truncation and round-off.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from bridgelab.config import DEFAULT_HBAR, DEFAULT_MASS
from bridgelab.exceptions import GridError
from bridgelab.functionals import quantum_potential
from bridgelab.grid import ComplexField, RealField, apply_multiplier, gradient
from bridgelab.state import action_gradient, density_mask, time_reverse

logger = logging.getLogger(__name__)


def _require_periodic(grid):
    if not grid.is_periodic:
        raise GridError("unitary propagation needs a periodic grid")


def free_phase(grid, dt, hbar, mass):
    """Spectral propagator exp(-i hbar k**2 dt / 2m)."""
    return np.exp(-1j * hbar * grid.wavenumbers**2 * dt / (2.0 * mass))


def step_schrodinger(psi, dt, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
    """Advance psi by dt under i hbar dpsi/dt = -(hbar**2 / 2m) d2psi/dx2.

    Raises:
        GridError: the grid is closed.
    """
    _require_periodic(psi.grid)
    if dt == 0:
        return psi
    phase = free_phase(psi.grid, dt, hbar, mass)
    return ComplexField(psi.grid, apply_multiplier(psi.values, phase))


def conjugate_step(psi_star, dt, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
    """Advance the conjugate wave function, which obeys i hbar dpsi*/dt = -H psi*."""
    return step_schrodinger(psi_star.conjugate(), dt, hbar, mass).conjugate()


@dataclass(frozen=True)
class UnitaryRun:
    """A fold of `n_steps` exact steps of length dt starting from psi0."""

    psi0: ComplexField
    dt: float
    n_steps: int
    hbar: float = DEFAULT_HBAR
    mass: float = DEFAULT_MASS

    def __post_init__(self):
        _require_periodic(self.psi0.grid)
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be positive, got {self.n_steps}")

    def states(self):
        """Yield psi after each step."""
        psi = self.psi0
        for _ in range(self.n_steps):
            psi = step_schrodinger(psi, self.dt, self.hbar, self.mass)
            yield psi

    def final(self):
        psi = self.psi0
        for psi in self.states():
            pass
        return psi


def propagate(psi, t, dt, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
    """Evolve psi over [0, t] in steps no longer than dt."""
    if t == 0:
        return psi
    n_steps = max(1, math.ceil(abs(t) / dt - 1e-9))
    return UnitaryRun(psi, t / n_steps, n_steps, hbar, mass).final()


def time_reversal_roundtrip(psi, t, dt, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
    """Evolve by t, time-reverse, evolve by t again, time-reverse; psi back up to round-off."""
    forward = propagate(psi, t, dt, hbar, mass)
    return time_reverse(propagate(time_reverse(forward), t, dt, hbar, mass))


def norm(psi):
    return float(psi.grid.integrate(np.abs(psi.values) ** 2))


def wavefunction_energy(psi, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
    """(hbar**2 / 2m) integral |dpsi/dx|**2, equal to the kinetic plus Bohm energy."""
    _require_periodic(psi.grid)
    dpsi = gradient(psi).values
    return float(hbar**2 / (2.0 * mass) * psi.grid.integrate(np.abs(dpsi) ** 2))


class MadelungResidual(NamedTuple):
    hj_residual: float
    continuity_residual: float
    quantum_term: float


def madelung_residual(state_t0, state_t1, dt, floor=None):
    """Residuals of the hydrodynamic equations between two states dt apart.

    The time derivatives are centred differences and the right-hand sides are
    averaged over both ends, so both residuals are second order in dt. The
    Hamilton-Jacobi residual is taken modulo a constant, since s carries an
    arbitrary additive constant per state.

    Args:
        state_t0, state_t1: HydroState at t and t + dt.
        dt: Time separation.
        floor: Relative density below which points are ignored; defaults to
            the phase threshold.

    Returns:
        MadelungResidual with the max-norm Hamilton-Jacobi and continuity
        residuals and the max-norm of the averaged quantum potential.
    """
    grid = state_t0.grid
    mass = state_t0.mass
    rho0, rho1 = state_t0.rho.values, state_t1.rho.values
    if floor is None:
        valid = density_mask(rho0) & density_mask(rho1)
    else:
        valid = (rho0 > floor * rho0.max()) & (rho1 > floor * rho1.max())

    grad0 = action_gradient(state_t0).values
    grad1 = action_gradient(state_t1).values
    bohm0 = quantum_potential(state_t0).values
    bohm1 = quantum_potential(state_t1).values
    quantum = 0.5 * (bohm0 + bohm1)

    hj_rhs = -0.25 / mass * (grad0**2 + grad1**2) - quantum
    hj = (state_t1.s.values - state_t0.s.values) / dt - hj_rhs
    weight = 0.5 * (rho0 + rho1) * valid
    hj = hj - grid.integrate(hj * weight) / grid.integrate(weight)

    flux0 = gradient(RealField(grid, rho0 * grad0 / mass)).values
    flux1 = gradient(RealField(grid, rho1 * grad1 / mass)).values
    continuity = (rho1 - rho0) / dt + 0.5 * (flux0 + flux1)

    return MadelungResidual(
        float(np.max(np.abs(hj[valid]))),
        float(np.max(np.abs(continuity[valid]))),
        float(np.max(np.abs(quantum[valid]))),
    )
