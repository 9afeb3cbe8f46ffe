"""Scalar functionals of a hydrodynamic state.

Moments, Fisher length, corrected uncertainties and the energy functionals H
(kinetic plus Bohm term) and K (kinetic minus Bohm term), with their NLGT
transforms. Uncertainty diagnostics come in a rest-frame form (means
subtracted) and a raw form; energies always use the raw action gradient.
"""

import logging
from dataclasses import dataclass

import numpy as np

from bridgelab.config import FISHER_FLOOR, PHASE_STEP_LIMIT
from bridgelab.exceptions import ConsistencyError, FisherDegenerate
from bridgelab.grid import RealField, gradient, second_derivative
from bridgelab.state import (
    action_gradient,
    apply_nlgt,
    max_action_step,
    to_bridge_pair,
    to_wavefunction,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FunctionalReport:
    """Every scalar functional of one state.

    d2_x, d2_p, sigma2_x and sigma2_p are rest-frame values; the *_raw fields
    keep the means in. h_cl, t_kin, q_bohm, h_quantum and k_like are energies.
    """

    d2_x: float
    d2_p: float
    d2_x_raw: float
    d2_p_raw: float
    fisher_len2: float
    sigma2_x: float
    sigma2_p: float
    sigma2_p_raw: float
    h_cl: float
    t_kin: float
    q_bohm: float
    h_quantum: float
    k_like: float


def _close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def mean_position(state):
    return state.grid.integrate(state.grid.points * state.rho.values)


def mean_momentum(state):
    return state.grid.integrate(action_gradient(state).values * state.rho.values)


def position_variance(state, rest_frame=True):
    """Second moment of the density, about its mean unless rest_frame is False."""
    x = state.grid.points
    if rest_frame:
        x = x - mean_position(state)
    return state.grid.integrate(x**2 * state.rho.values)


def momentum_variance(state, rest_frame=True):
    """Integral of rho |grad s - p_mean|**2 (p_mean = 0 when rest_frame is False)."""
    grad_s = action_gradient(state).values
    if rest_frame:
        grad_s = grad_s - state.grid.integrate(grad_s * state.rho.values)
    return state.grid.integrate(grad_s**2 * state.rho.values)


def _amplitude_gradient(state):
    return gradient(RealField(state.grid, np.sqrt(state.rho.values))).values


def fisher_integral(state):
    """Integral of |grad sqrt(rho)|**2, one quarter of the Fisher information."""
    return state.grid.integrate(_amplitude_gradient(state) ** 2)


def fisher_length2(state):
    """Squared Fisher length 1 / (4 * integral |grad sqrt(rho)|**2).

    Raises:
        FisherDegenerate: the integral is below FISHER_FLOOR.
    """
    integral = fisher_integral(state)
    if integral < FISHER_FLOOR:
        raise FisherDegenerate(f"Fisher integral {integral!r} is below {FISHER_FLOOR:g}")
    return 1.0 / (4.0 * integral)


def quantum_potential(state):
    """Bohm potential -(hbar**2 / 2m) lap(sqrt(rho)) / sqrt(rho), zero where rho is unresolved."""
    amplitude = np.sqrt(state.rho.values)
    lap = second_derivative(RealField(state.grid, amplitude)).values
    out = np.zeros(state.grid.n)
    valid = state.valid
    out[valid] = -(state.hbar**2) / (2.0 * state.mass) * lap[valid] / amplitude[valid]
    return RealField(state.grid, out)


def heisenberg_product(state, alpha_r, tol=1e-8, check=True):
    """Uncertainty product of the NLGT-transformed state.

    The direct value transforms the state and takes sigma2_x = D2_x and
    sigma2_p = D2_p + hbar**2 / (4 Delta2_x) from raw integrals. It is compared
    with exp(-2a) D2_x D2_p + (hbar**2 / 4) D2_x / Delta2_x built from the
    untransformed state.

    Returns:
        (sigma2_x_alpha, sigma2_p_alpha, product)

    Raises:
        ConsistencyError: check is True and the two values differ by more than tol.
    """
    transformed = apply_nlgt(state, alpha_r)
    sigma2_x = position_variance(transformed, rest_frame=False)
    fisher = fisher_length2(transformed)
    sigma2_p = momentum_variance(transformed, rest_frame=False) + state.hbar**2 / (4.0 * fisher)
    product = sigma2_x * sigma2_p

    if check:
        rhs = heisenberg_rhs(state, alpha_r)
        if not _close(product, rhs, tol):
            raise ConsistencyError(
                f"uncertainty product {product!r} differs from closed form {rhs!r} "
                f"at alpha={alpha_r}"
            )
    return sigma2_x, sigma2_p, product


def heisenberg_rhs(state, alpha_r):
    """Closed form of the transformed uncertainty product from untransformed raw integrals."""
    d2_x = position_variance(state, rest_frame=False)
    d2_p = momentum_variance(state, rest_frame=False)
    fisher = fisher_length2(state)
    return np.exp(-2.0 * alpha_r) * d2_x * d2_p + 0.25 * state.hbar**2 * d2_x / fisher


def wavefunction_resolved(state):
    """True on periodic grids where s / hbar changes by at most PHASE_STEP_LIMIT per cell."""
    if not state.grid.is_periodic:
        return False
    return max_action_step(state) / state.hbar <= PHASE_STEP_LIMIT


def wavefunction_kinetic(state):
    """(hbar**2 / 2m) integral |dpsi/dx|**2 with psi built from the state."""
    dpsi = gradient(to_wavefunction(state)).values
    return float(state.hbar**2 / (2.0 * state.mass) * state.grid.integrate(np.abs(dpsi) ** 2))


def energies(state, tol=1e-10, check=True):
    """Fill a FunctionalReport for the state.

    When check is True and the wave function of the state is resolved on a
    periodic grid, h_quantum is compared with <psi|H|psi> computed from psi.

    Raises:
        FisherDegenerate: the Fisher integral is below FISHER_FLOOR.
        ConsistencyError: the two energies differ by more than tol.
    """
    grad_s = action_gradient(state).values
    rho = state.rho.values
    integrate = state.grid.integrate

    d2_x_raw = position_variance(state, rest_frame=False)
    d2_x = position_variance(state)
    d2_p_raw = integrate(grad_s**2 * rho)
    p_mean = integrate(grad_s * rho)
    d2_p = integrate((grad_s - p_mean) ** 2 * rho)

    integral = fisher_integral(state)
    if integral < FISHER_FLOOR:
        raise FisherDegenerate(f"Fisher integral {integral!r} is below {FISHER_FLOOR:g}")
    fisher = 1.0 / (4.0 * integral)
    correction = state.hbar**2 / (4.0 * fisher)

    two_m = 2.0 * state.mass
    t_kin = d2_p_raw / two_m
    q_bohm = state.hbar**2 * integral / two_m
    report = FunctionalReport(
        d2_x=d2_x,
        d2_p=d2_p,
        d2_x_raw=d2_x_raw,
        d2_p_raw=d2_p_raw,
        fisher_len2=fisher,
        sigma2_x=d2_x,
        sigma2_p=d2_p + correction,
        sigma2_p_raw=d2_p_raw + correction,
        h_cl=t_kin,
        t_kin=t_kin,
        q_bohm=q_bohm,
        h_quantum=t_kin + q_bohm,
        k_like=t_kin - q_bohm,
    )
    if check and wavefunction_resolved(state):
        h_wave = wavefunction_kinetic(state)
        if not _close(report.h_quantum, h_wave, tol):
            raise ConsistencyError(
                f"h_quantum {report.h_quantum!r} disagrees with <psi|H|psi> {h_wave!r}"
            )
    return report


def rotation_formula(h, k, alpha_r):
    """Hyperbolic rotation of (H, K) under an NLGT with real parameter alpha_r."""
    c, sh, shrink = np.cosh(alpha_r), np.sinh(alpha_r), np.exp(-alpha_r)
    return shrink * (c * h - sh * k), shrink * (-sh * h + c * k)


def rotated_energy_paths(state, alpha_r):
    """(H(a), K(a)) by the rotation formulas and by integrals on the transformed state."""
    report = energies(state)
    rotated = rotation_formula(report.h_quantum, report.k_like, alpha_r)
    direct = energies(apply_nlgt(state, alpha_r))
    return rotated, (direct.h_quantum, direct.k_like)


def rotated_energies(state, alpha_r, tol=1e-8, check=True):
    """H and K of the NLGT-transformed state.

    Both equal exp(-2a) T + Q and exp(-2a) T - Q, with T the kinetic and Q the
    Bohm term of the untransformed state.

    Raises:
        ConsistencyError: check is True and the two computation paths disagree.
    """
    (h_rot, k_rot), (h_dir, k_dir) = rotated_energy_paths(state, alpha_r)
    if check and not (_close(h_rot, h_dir, tol) and _close(k_rot, k_dir, tol)):
        raise ConsistencyError(
            f"rotated energies ({h_rot!r}, {k_rot!r}) disagree with direct integrals "
            f"({h_dir!r}, {k_dir!r}) at alpha={alpha_r}"
        )
    return h_rot, k_rot


def rotate_parameters(t, tau, alpha_r):
    """Hyperbolic rotation of the flow parameters; t**2 - tau**2 is preserved."""
    c, sh = np.cosh(alpha_r), np.sinh(alpha_r)
    return c * t + sh * tau, sh * t + c * tau


def hamiltonian_apply(field, hbar, mass):
    """Free Hamiltonian -(hbar**2 / 2m) d2/dx2 applied to a field."""
    return field.with_values(-(hbar**2) / (2.0 * mass) * second_derivative(field).values)


def k_from_imaginary_nlgt(state, tol=1e-6, check=True):
    """K = -integral phi_hat H phi, the energy reached at alpha = -i pi / 2.

    Raises:
        ScalingError: the action is too large for the bridge pair.
        ConsistencyError: check is True and the value differs from energies().k_like.
    """
    pair = to_bridge_pair(state)
    h_phi = hamiltonian_apply(pair.phi_fwd, state.hbar, state.mass).values
    value = -state.grid.integrate(pair.phi_bwd.values * h_phi)
    if check:
        expected = energies(state).k_like
        if not _close(value, expected, tol):
            raise ConsistencyError(
                f"-<phi_hat|H|phi> = {value!r} differs from the K integral {expected!r}"
            )
    return value


def classical_limit_exponent(hbars, gaps):
    """Least-squares slope of log|H - K| against log(hbar); two for a smooth state."""
    slope, _ = np.polyfit(np.log(np.asarray(hbars)), np.log(np.abs(np.asarray(gaps))), 1)
    return float(slope)
