"""Closed-form Gaussian results used as oracles for the grid computations.

Covers the free spreading packet, the bridge-width family A(tau', alpha), the
collapse profile, and exact Gaussian t- and tau-steps. The bridge-family
parameter is called `alpha_param` throughout so it is never confused with the
NLGT parameter.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

from bridgelab.config import DEFAULT_HBAR, DEFAULT_MASS
from bridgelab.exceptions import NegativeWidth, NoValidRoot, VarianceCollapse
from bridgelab.grid import ComplexField
from bridgelab.state import HydroState

logger = logging.getLogger(__name__)


def packet_width(sigma, t, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
    """Position variance sigma * a(t) of the free packet, a(t) = 1 + (hbar t / 2 m sigma)**2."""
    return sigma * (1.0 + (hbar * t / (2.0 * mass * sigma)) ** 2)


@dataclass(frozen=True)
class GaussianPacket:
    """Free packet that starts as exp(-(x - center)**2 / 4 sigma) at t = 0."""

    sigma: float
    t: float = 0.0
    center: float = 0.0
    hbar: float = DEFAULT_HBAR
    mass: float = DEFAULT_MASS

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def complex_width(self):
        return self.sigma + 1j * self.hbar * self.t / (2.0 * self.mass)

    @property
    def width(self):
        return packet_width(self.sigma, self.t, self.hbar, self.mass)

    def at(self, t):
        return replace(self, t=t)


def packet_wavefunction(packet, grid):
    """Samples of the evolved packet, normalized on the grid.

    Carries the global phase of the exact free evolution, so grid propagation
    can be compared pointwise.
    """
    x = grid.points - packet.center
    width = packet.complex_width
    psi = np.sqrt(packet.sigma / width) * np.exp(-(x**2) / (4.0 * width))
    psi /= np.sqrt(grid.integrate(np.abs(psi) ** 2))
    return ComplexField(grid, psi)


def packet_state(packet, grid):
    """HydroState of the evolved packet with its analytic density and action."""
    x = grid.points - packet.center
    width = packet.width
    rho = np.exp(-(x**2) / (2.0 * width))
    spread = packet.hbar * packet.t / (2.0 * packet.mass)
    s = packet.hbar * spread * x**2 / (4.0 * packet.sigma * width)
    return HydroState.from_arrays(grid, rho, s, packet.hbar, packet.mass)


@dataclass(frozen=True)
class GaussianBridgeSpec:
    """Parameters of the Gaussian bridge-width family.

    alpha_param may be infinite (1 / alpha_param = 0).
    """

    sigma: float
    tau: float
    alpha_param: float
    x_m: float = 0.0
    hbar: float = DEFAULT_HBAR
    mass: float = DEFAULT_MASS

    @property
    def inverse_alpha(self):
        return 0.0 if np.isinf(self.alpha_param) else 1.0 / self.alpha_param


def _width_factor(u, r):
    return (1.0 + u * r) * (1.0 - (1.0 - u) * r)


def bridge_width(spec, tau_prime):
    """sigma (1 + u r)(1 - (1 - u) r) with u = 1 / alpha_param and r = (hbar/m) tau' / sigma.

    Raises:
        NegativeWidth: the width is not positive at tau_prime.
    """
    if not 0.0 <= tau_prime <= spec.tau * (1.0 + 1e-12):
        raise ValueError(f"tau_prime must lie in [0, {spec.tau}], got {tau_prime}")
    r = spec.hbar / spec.mass * tau_prime / spec.sigma
    width = spec.sigma * _width_factor(spec.inverse_alpha, r)
    if width <= 0:
        raise NegativeWidth(
            f"bridge width {width!r} at tau'={tau_prime} for alpha_param={spec.alpha_param}"
        )
    return width


def solve_alpha(sigma, t, tau, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
    """alpha_param whose bridge ends at the packet width sigma * a(t) after tau.

    With u = 1 / alpha_param and r = (hbar/m) tau / sigma the end condition is
    r**2 u**2 + r (2 - r) u + (1 - r - a) = 0. A root is admissible when both
    width factors stay positive on [0, tau]; ties go to the smaller |u|.

    Raises:
        NoValidRoot: no admissible root, or back-substitution misses by more than 1e-10.
    """
    if not (sigma > 0 and tau > 0):
        raise ValueError("sigma and tau must be positive")
    a = packet_width(sigma, t, hbar, mass) / sigma
    r = hbar / mass * tau / sigma
    disc = (r * (2.0 - r)) ** 2 - 4.0 * r**2 * (1.0 - r - a)
    if disc < 0:
        raise NoValidRoot(f"no real root for sigma={sigma}, t={t}, tau={tau}")
    root = np.sqrt(disc)
    candidates = [(-r * (2.0 - r) + sign * root) / (2.0 * r**2) for sign in (1.0, -1.0)]
    admissible = [u for u in candidates if 1.0 + u * r > 0 and 1.0 - (1.0 - u) * r > 0]
    if not admissible:
        raise NoValidRoot(f"both roots {candidates} give a non-positive width")
    u = min(admissible, key=abs)

    residual = abs(_width_factor(u, r) - a)
    if residual > 1e-10 * max(1.0, a):
        raise NoValidRoot(f"back-substitution misses a(t)={a!r} by {residual:.3g}")
    logger.debug("solve_alpha: roots %s, chose u=%r", candidates, u)
    return np.inf if u == 0 else 1.0 / u


def coupling_covariance(v0, v1, tau, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
    """Covariance of the end points of the Gaussian bridge between variances v0 and v1."""
    d = hbar / mass * tau
    return 0.5 * (np.sqrt(4.0 * v0 * v1 + d**2) - d)


def gaussian_bridge_variance(v0, v1, tau, tau_prime, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
    """Exact interior variance of the bridge between centred Gaussians of variance v0 and v1.

    For v0 = sigma this is bridge_width with 1 / alpha_param = 1 + (C - sigma) / D,
    where C is the coupling covariance and D = (hbar/m) tau.
    """
    d = hbar / mass * tau
    c = coupling_covariance(v0, v1, tau, hbar, mass)
    r = tau_prime / tau
    return (1.0 - r) ** 2 * v0 + r**2 * v1 + 2.0 * r * (1.0 - r) * c + d * r * (1.0 - r)


def collapse_profile(
    sigma, tau, b_floor, x_m, tau_prime, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS
):
    """Center and width of the collapse bridge onto x_m.

    B(tau') = [1 + (D / sigma - 1) r](1 - r) with r = tau'/tau and
    D = (hbar/m) tau, which is [1 + (1/sigma - 1) r](1 - r) in units where
    D = 1. The measurement width enters as sigma * b_floor * r**2 on top.

    Returns:
        (center, width)
    """
    if not 0.0 <= tau_prime <= tau * (1.0 + 1e-12):
        raise ValueError(f"tau_prime must lie in [0, {tau}], got {tau_prime}")
    r = tau_prime / tau
    d = hbar / mass * tau
    b = (1.0 + (d / sigma - 1.0) * r) * (1.0 - r)
    return x_m * r, sigma * b + sigma * b_floor * r**2


@dataclass(frozen=True)
class GaussianMode:
    """exp(log_amplitude) * exp(-(x - center)**2 / 2 variance)."""

    center: float
    variance: float
    log_amplitude: float = 0.0

    def sample(self, grid):
        x = grid.points - self.center
        return np.exp(self.log_amplitude - x**2 / (2.0 * self.variance))

    def log_sample(self, grid):
        x = grid.points - self.center
        return self.log_amplitude - x**2 / (2.0 * self.variance)


def gaussian_tau_step(mode, dtau, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS, backward=False):
    """Exact heat (or anti-heat, when backward) flow of a Gaussian over dtau.

    The variance changes by +/- (hbar/m) dtau and the integral is preserved.

    Raises:
        VarianceCollapse: the anti-heat flow would make the variance non-positive.
    """
    if dtau == 0:
        return mode
    shift = hbar / mass * dtau
    variance = mode.variance - shift if backward else mode.variance + shift
    if variance <= 0:
        raise VarianceCollapse(
            f"anti-heat step of {dtau} leaves variance {variance!r} from {mode.variance!r}"
        )
    log_amplitude = mode.log_amplitude + 0.5 * np.log(mode.variance / variance)
    return GaussianMode(mode.center, variance, log_amplitude)


@dataclass(frozen=True)
class GaussianPair:
    fwd: GaussianMode
    bwd: GaussianMode
    hbar: float = DEFAULT_HBAR
    mass: float = DEFAULT_MASS


def gaussian_pair_tau_step(pair, dtau):
    """Heat flow on the forward mode and anti-heat flow on the backward mode."""
    return replace(
        pair,
        fwd=gaussian_tau_step(pair.fwd, dtau, pair.hbar, pair.mass),
        bwd=gaussian_tau_step(pair.bwd, dtau, pair.hbar, pair.mass, backward=True),
    )


@dataclass(frozen=True)
class GaussianState:
    """Gaussian density with action s = p (x - c) + chirp (x - c)**2 / 2."""

    center: float
    variance: float
    chirp: float = 0.0
    momentum: float = 0.0
    hbar: float = DEFAULT_HBAR
    mass: float = DEFAULT_MASS

    @classmethod
    def from_packet(cls, packet):
        width = packet.width
        chirp = packet.hbar**2 * packet.t / (4.0 * packet.mass * packet.sigma * width)
        return cls(packet.center, width, chirp, 0.0, packet.hbar, packet.mass)

    @property
    def fisher_length2(self):
        return self.variance

    def to_hydro(self, grid):
        return HydroState.gaussian(
            grid, self.variance, self.center, self.momentum, self.chirp, self.hbar, self.mass
        )


def gaussian_t_step(state, dt):
    """Exact free evolution: 1 / (4A) gains i hbar dt / 2m, the centre drifts by p dt / m."""
    hbar, mass = state.hbar, state.mass
    a = 1.0 / (4.0 * state.variance) - 1j * state.chirp / (2.0 * hbar)
    w = 1.0 / (4.0 * a) + 1j * hbar * dt / (2.0 * mass)
    a = 1.0 / (4.0 * w)
    return replace(
        state,
        center=state.center + state.momentum * dt / mass,
        variance=1.0 / (4.0 * a.real),
        chirp=-2.0 * hbar * a.imag,
    )


def gaussian_pair(state):
    """(phi, phi_hat) of a Gaussian state as Gaussian modes.

    Raises:
        VarianceCollapse: the chirp is too large for phi_hat to be normalizable.
    """
    hbar = state.hbar
    half = 1.0 / (2.0 * state.variance)
    inv_fwd = half + state.chirp / hbar
    inv_bwd = half - state.chirp / hbar
    if inv_fwd <= 0 or inv_bwd <= 0:
        raise VarianceCollapse(f"chirp {state.chirp!r} leaves a non-normalizable pair function")
    v_fwd, v_bwd = 1.0 / inv_fwd, 1.0 / inv_bwd
    base = -0.25 * np.log(2.0 * np.pi * state.variance)
    p = state.momentum
    fwd = GaussianMode(
        state.center - p * v_fwd / hbar, v_fwd, base + p**2 * v_fwd / (2.0 * hbar**2)
    )
    bwd = GaussianMode(
        state.center + p * v_bwd / hbar, v_bwd, base + p**2 * v_bwd / (2.0 * hbar**2)
    )
    return GaussianPair(fwd, bwd, hbar, state.mass)


def gaussian_state_from_pair(pair):
    """Gaussian state with rho = phi phi_hat and s = (hbar/2) ln(phi_hat / phi)."""
    fwd, bwd = pair.fwd, pair.bwd
    precision = 1.0 / fwd.variance + 1.0 / bwd.variance
    center = (fwd.center / fwd.variance + bwd.center / bwd.variance) / precision
    half_hbar = 0.5 * pair.hbar
    chirp = half_hbar * (1.0 / fwd.variance - 1.0 / bwd.variance)
    momentum = half_hbar * (
        (center - fwd.center) / fwd.variance - (center - bwd.center) / bwd.variance
    )
    return GaussianState(center, 1.0 / precision, chirp, momentum, pair.hbar, pair.mass)


def gaussian_state_tau_step(state, dtau):
    return gaussian_state_from_pair(gaussian_pair_tau_step(gaussian_pair(state), dtau))


def mixed_difference(state, delta_t, delta_tau, t_step, tau_step, measure):
    """[measure(tau_step(t_step(x))) - measure(t_step(tau_step(x)))] / (delta_t delta_tau).

    t_step and tau_step take (state, delta) and measure maps a state to a number.
    """
    t_first = measure(tau_step(t_step(state, delta_t), delta_tau))
    tau_first = measure(t_step(tau_step(state, delta_tau), delta_t))
    return (t_first - tau_first) / (delta_t * delta_tau)


def gaussian_mixed_difference(state, delta_t, delta_tau):
    """Mixed difference of the Fisher length squared under the exact Gaussian flows."""
    return mixed_difference(
        state,
        delta_t,
        delta_tau,
        gaussian_t_step,
        gaussian_state_tau_step,
        lambda g: g.fisher_length2,
    )


def fisher_curvature(variance, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
    """Limit hbar**2 / (m**2 Delta2) of the mixed difference as both steps shrink."""
    return hbar**2 / (mass**2 * variance)


def printed_fisher_curvature(variance, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
    """The closed form 2 hbar**2 / (m**2 Delta2), twice the limit of the exact flows."""
    return 2.0 * fisher_curvature(variance, hbar, mass)


def richardson(coarse, fine, order=1):
    """Extrapolate two estimates at step h and h/2 with leading error h**order."""
    factor = 2.0**order
    return (factor * fine - coarse) / (factor - 1.0)
