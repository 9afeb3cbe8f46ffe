"""Schrödinger bridges between two densities on a grid.

The bridge is carried by a forward function phi (heat flow from tau' = 0) and
a backward function phi_hat (heat flow back from tau' = tau), with interior
density rho = phi * phi_hat. The boundary functions solve the Schrödinger
system, found here by Sinkhorn (iterative proportional fitting) in the log
domain, in the style of the log-stabilized Sinkhorn solvers of the optimal
transport libraries.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import fft
from scipy.special import logsumexp

from bridgelab.config import (
    ANTI_HEAT_BUDGET,
    ANTI_HEAT_CUTOFF,
    DEFAULT_HBAR,
    DEFAULT_MASS,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    NORM_TOLERANCE,
    SIGN_MAGNITUDE_FLOOR,
)
from bridgelab.exceptions import AntiHeatUnstable, GridError, NonConvergence, ZeroMarginal
from bridgelab.functionals import energies, fisher_length2, hamiltonian_apply, position_variance
from bridgelab.grid import Grid1D, RealField, apply_multiplier
from bridgelab.state import BridgePair, from_bridge_pair

logger = logging.getLogger(__name__)


def heat_multiplier(grid, dtau, hbar, mass, backward=False):
    """Spectral heat propagator exp(-/+ hbar k**2 dtau / 2m)."""
    sign = 1.0 if backward else -1.0
    with np.errstate(over="ignore"):
        return np.exp(sign * hbar * grid.wavenumbers**2 * dtau / (2.0 * mass))


class HeatKernel:
    """Heat flow with diffusion variance (hbar/m) dtau on a grid.

    The quadrature kernel K f(x_i) = sum_j G_ij w_j f_j / Z_i uses the Gaussian
    G_ij = exp(-d_ij**2 / 2V) (nearest-image distance on periodic grids) and
    Z_i = sum_j G_ij w_j, so K maps constants to themselves. Its adjoint in the
    quadrature inner product preserves the integral. Both directions have a
    log-domain form for functions that underflow.
    """

    def __init__(self, grid, dtau, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
        if dtau < 0:
            raise ValueError(f"dtau must be non-negative, got {dtau}")
        self.grid = grid
        self.dtau = float(dtau)
        self.hbar = hbar
        self.mass = mass
        self.variance = hbar / mass * self.dtau

    @property
    def is_identity(self):
        return self.dtau == 0.0

    @cached_property
    def _log_matrix(self):
        x = self.grid.points
        d = np.abs(x[:, None] - x[None, :])
        if self.grid.is_periodic:
            span = self.grid.x_max - self.grid.x_min
            d = np.minimum(d, span - d)
        return -(d**2) / (2.0 * self.variance) + np.log(self.grid.weights)[None, :]

    @cached_property
    def _log_norm(self):
        return logsumexp(self._log_matrix, axis=1)

    @cached_property
    def _matrix(self):
        return np.exp(self._log_matrix - self._log_norm[:, None])

    def apply(self, values):
        """K f for real samples; spectral on periodic grids."""
        values = np.asarray(values, dtype=float)
        if self.is_identity:
            return values.copy()
        if self.grid.is_periodic:
            multiplier = heat_multiplier(self.grid, self.dtau, self.hbar, self.mass)
            return apply_multiplier(values, multiplier)
        return self._matrix @ values

    def log_apply(self, log_values):
        """log K f from log f."""
        log_values = np.asarray(log_values, dtype=float)
        if self.is_identity:
            return log_values.copy()
        return logsumexp(self._log_matrix + log_values[None, :], axis=1) - self._log_norm

    def log_apply_adjoint(self, log_values):
        """log K^T f from log f, with K^T the integral-preserving adjoint."""
        log_values = np.asarray(log_values, dtype=float)
        if self.is_identity:
            return log_values.copy()
        return logsumexp(self._log_matrix + (log_values - self._log_norm)[None, :], axis=1)


def heat_kernel_apply(f, dtau, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
    """Gaussian smoothing of a field with variance (hbar/m) dtau."""
    return f.with_values(HeatKernel(f.grid, dtau, hbar, mass).apply(f.values))


def _log_density(values, name):
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        raise ZeroMarginal(
            f"{name} vanishes at {int(np.sum(values <= 0))} grid points; "
            "bridge marginals must be strictly positive"
        )
    return np.log(values)


def normalized_log_gaussian(grid, center, variance):
    """Log samples of a Gaussian density normalized on the grid; never underflows."""
    log_values = -((grid.points - center) ** 2) / (2.0 * variance)
    return log_values - logsumexp(log_values + np.log(grid.weights))


@dataclass(frozen=True)
class BridgeProblem:
    """Two marginals a bridge time tau apart.

    Marginals may also be given as log samples (log_rho0, log_rho1), which
    then take precedence so that narrow marginals do not underflow.
    """

    grid: Grid1D
    rho0: RealField
    rho1: RealField
    tau: float
    hbar: float = DEFAULT_HBAR
    mass: float = DEFAULT_MASS
    log_rho0: np.ndarray | None = field(default=None, repr=False, compare=False)
    log_rho1: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        for name in ("rho0", "rho1"):
            total = self.grid.integrate(getattr(self, name).values)
            if abs(total - 1.0) > NORM_TOLERANCE:
                raise ValueError(f"{name} integrates to {total!r}, expected 1")

    @classmethod
    def from_logs(cls, grid, log_rho0, log_rho1, tau, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
        log_rho0 = np.asarray(log_rho0, dtype=float)
        log_rho1 = np.asarray(log_rho1, dtype=float)
        return cls(
            grid,
            RealField(grid, np.exp(log_rho0)),
            RealField(grid, np.exp(log_rho1)),
            tau,
            hbar,
            mass,
            log_rho0,
            log_rho1,
        )

    def log_marginals(self):
        """(log rho0, log rho1).

        Raises:
            ZeroMarginal: a marginal given only as samples has zeros.
        """
        log0 = self.log_rho0
        if log0 is None:
            log0 = _log_density(self.rho0.values, "rho0")
        log1 = self.log_rho1
        if log1 is None:
            log1 = _log_density(self.rho1.values, "rho1")
        return log0, log1


def reversed_problem(problem):
    """The same bridge run backwards: marginals swapped."""
    return BridgeProblem(
        problem.grid,
        problem.rho1,
        problem.rho0,
        problem.tau,
        problem.hbar,
        problem.mass,
        problem.log_rho1,
        problem.log_rho0,
    )


@dataclass(frozen=True)
class BridgeSolution:
    """Gauge-fixed boundary functions phi(x, 0) and phi_hat(x, tau)."""

    problem: BridgeProblem
    phi0: RealField
    phiT: RealField
    iterations: int
    marginal_residual: float
    residual_history: tuple = ()
    log_phi0: np.ndarray | None = field(default=None, repr=False, compare=False)
    log_phiT: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def grid(self):
        return self.problem.grid

    @property
    def tau(self):
        return self.problem.tau


def solve_schrodinger_system(problem, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Boundary functions of the bridge by log-domain Sinkhorn iteration.

    Starting from phi_hat(tau) = 1, alternate
        phi(0)      = rho0 / K phi_hat(tau)
        phi_hat(tau) = rho1 / K^T phi(0)
    until the L1 defect of the tau-marginal is at most tol. The solution is
    gauge fixed so that phi(0) and phi_hat(tau) have equal integrals.

    Raises:
        ZeroMarginal: a marginal has zeros.
        NonConvergence: max_iter iterations without reaching tol.
    """
    grid = problem.grid
    kernel = HeatKernel(grid, problem.tau, problem.hbar, problem.mass)
    log_rho0, log_rho1 = problem.log_marginals()
    rho1 = np.exp(log_rho1)

    log_phiT = np.zeros(grid.n)
    history = []
    for iteration in range(1, max_iter + 1):
        log_phi0 = log_rho0 - kernel.log_apply(log_phiT)
        pushed = kernel.log_apply_adjoint(log_phi0)
        defect = float(grid.integrate(np.abs(np.exp(log_phiT + pushed) - rho1)))
        history.append(defect)
        logger.debug("sinkhorn iteration %d: marginal defect %.3e", iteration, defect)
        if defect <= tol:
            break
        log_phiT = log_rho1 - pushed
    else:
        raise NonConvergence(
            f"Sinkhorn stopped after {max_iter} iterations with marginal defect {defect:.3e}",
            residual=defect,
            iterations=max_iter,
        )

    # Gauge (c phi, phi_hat / c) with equal integrals.
    log_c = 0.5 * (
        logsumexp(log_phiT, b=grid.weights) - logsumexp(log_phi0, b=grid.weights)
    )
    log_phi0 = log_phi0 + log_c
    log_phiT = log_phiT - log_c
    logger.info("Sinkhorn converged in %d iterations (defect %.3e)", iteration, defect)
    return BridgeSolution(
        problem,
        RealField(grid, np.exp(log_phi0)),
        RealField(grid, np.exp(log_phiT)),
        iteration,
        defect,
        tuple(history),
        log_phi0,
        log_phiT,
    )


def interior(solution, tau_prime):
    """Bridge pair and density at tau' in [0, tau].

    phi(tau') is phi(0) carried forward over tau', phi_hat(tau') is
    phi_hat(tau) carried back over tau - tau'.

    Returns:
        (BridgePair, RealField rho)
    """
    problem = solution.problem
    if not -1e-12 <= tau_prime <= problem.tau * (1.0 + 1e-12):
        raise ValueError(f"tau_prime must lie in [0, {problem.tau}], got {tau_prime}")
    tau_prime = min(max(tau_prime, 0.0), problem.tau)
    hbar, mass = problem.hbar, problem.mass
    forward = HeatKernel(solution.grid, tau_prime, hbar, mass)
    log_fwd = forward.log_apply_adjoint(solution.log_phi0)
    log_bwd = HeatKernel(solution.grid, problem.tau - tau_prime, hbar, mass).log_apply(
        solution.log_phiT
    )
    pair = BridgePair.from_logs(solution.grid, log_fwd, log_bwd, hbar, mass)
    return pair, RealField(solution.grid, np.exp(log_fwd + log_bwd))


def interior_state(solution, tau_prime):
    """HydroState of the bridge at tau', renormalized on the grid."""
    pair, _ = interior(solution, tau_prime)
    return from_bridge_pair(pair, normalize=True)


def tau_step(pair, dtau):
    """Advance a bridge pair by dtau: heat flow on phi, anti-heat flow on phi_hat.

    The anti-heat flow keeps wavenumbers up to ANTI_HEAT_CUTOFF of the grid
    maximum and zeroes the rest.

    Raises:
        GridError: the grid is closed.
        AntiHeatUnstable: the amplified spectrum of phi_hat above the cutoff
            carries more than ANTI_HEAT_BUDGET of its norm.
    """
    grid = pair.grid
    if not grid.is_periodic:
        raise GridError("tau steps need a periodic grid")
    if dtau < 0:
        raise ValueError(f"dtau must be non-negative, got {dtau}")
    if dtau == 0:
        return pair

    fwd = apply_multiplier(pair.phi_fwd.values, heat_multiplier(grid, dtau, pair.hbar, pair.mass))

    amplified = fft.fft(pair.phi_bwd.values) * heat_multiplier(
        grid, dtau, pair.hbar, pair.mass, backward=True
    )
    k = np.abs(grid.wavenumbers)
    high = k > ANTI_HEAT_CUTOFF * k.max()
    with np.errstate(over="ignore", invalid="ignore"):
        power = np.abs(amplified) ** 2
        fraction = power[high].sum() / power.sum()
    if not np.isfinite(fraction) or fraction > ANTI_HEAT_BUDGET:
        raise AntiHeatUnstable(
            f"anti-heat step of {dtau} puts {fraction:.3g} of the norm above the cutoff"
        )
    amplified[high] = 0.0
    bwd = fft.ifft(amplified).real

    return BridgePair(
        grid, RealField(grid, fwd), RealField(grid, bwd), pair.hbar, pair.mass
    )


def collapse_bridge(
    state0, x_m, width_floor, tau, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER
):
    """Bridge from a state's density to a narrow Gaussian at the measured position x_m.

    The terminal marginal has variance sigma * width_floor, sigma being the
    position variance of state0; it is built in the log domain.
    """
    if not width_floor > 0:
        raise ValueError(f"width_floor must be positive, got {width_floor}")
    grid = state0.grid
    sigma = position_variance(state0)
    log_rho0 = _log_density(state0.rho.values, "rho0")
    log_rho1 = normalized_log_gaussian(grid, x_m, sigma * width_floor)
    problem = BridgeProblem.from_logs(grid, log_rho0, log_rho1, tau, state0.hbar, state0.mass)
    return solve_schrodinger_system(problem, tol, max_iter)


def bridge_k_functional(pair):
    """K = -integral phi_hat H phi along the bridge; constant in tau'."""
    h_phi = hamiltonian_apply(pair.phi_fwd, pair.hbar, pair.mass).values
    return float(-pair.grid.integrate(pair.phi_bwd.values * h_phi))


class SignSample(NamedTuple):
    tau_prime: float
    d_fisher: float
    d_sigma2_p: float
    status: str


def _sign_status(d_fisher, d_sigma2_p):
    if min(abs(d_fisher), abs(d_sigma2_p)) <= SIGN_MAGNITUDE_FLOOR:
        return "inconclusive"
    return "pass" if d_fisher * d_sigma2_p < 0 else "fail"


def sign_property_samples(solution, taus, step):
    """Central differences of Delta2_x and sigma2_p along the bridge.

    Each sample is "pass" when the two derivatives have opposite signs, "fail"
    when they share a sign and "inconclusive" when either is below
    SIGN_MAGNITUDE_FLOOR. Near the ends the difference becomes one-sided.
    """
    samples = []
    for tau_prime in taus:
        lo = max(tau_prime - step, 0.0)
        hi = min(tau_prime + step, solution.tau)
        states = [interior_state(solution, t) for t in (lo, hi)]
        fisher = [fisher_length2(s) for s in states]
        sigma2_p = [energies(s, check=False).sigma2_p_raw for s in states]
        d_fisher = (fisher[1] - fisher[0]) / (hi - lo)
        d_sigma2_p = (sigma2_p[1] - sigma2_p[0]) / (hi - lo)
        samples.append(
            SignSample(tau_prime, d_fisher, d_sigma2_p, _sign_status(d_fisher, d_sigma2_p))
        )
    return samples
