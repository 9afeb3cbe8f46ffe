"""Hydrodynamic states, their wave-function and bridge-pair forms, and the NLGT action.

A state is a density rho and an action s. The same state can be read as a wave
function psi = sqrt(rho) exp(i s / hbar) or as a pair of real functions
(phi, phi_hat) = (sqrt(rho) exp(-s / hbar), sqrt(rho) exp(+s / hbar)). The
nonlinear gauge transformation (NLGT) rescales s by exp(-alpha) and leaves rho
alone; the imaginary parameters alpha = i k pi / 2 switch between the forms.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from bridgelab.config import (
    ACTION_OVERFLOW,
    DEFAULT_HBAR,
    DEFAULT_MASS,
    DENSITY_THRESHOLD,
    NORM_TOLERANCE,
    PHASE_STEP_LIMIT,
)
from bridgelab.exceptions import DiscreteGaugeError, NormalizationError, ScalingError
from bridgelab.grid import ComplexField, Grid1D, RealField, gradient

logger = logging.getLogger(__name__)

NLGT_METHODS = ["action", "power"]
DISCRETE_K = (-1, 0, 1, 2)


def density_mask(rho):
    """Boolean mask of points whose density exceeds the relative threshold."""
    rho = np.asarray(rho)
    return rho > DENSITY_THRESHOLD * rho.max()


def _fill_undefined(x, values, defined):
    """Extend samples outside `defined` from the defined ones.

    Gaps between defined points are bridged linearly; the outer tails continue
    with the slope at the last defined point so the gradient has no jump there.
    """
    if defined.all():
        return values
    idx = np.flatnonzero(defined)
    out = values.copy()
    out[~defined] = np.interp(x[~defined], x[idx], values[idx])
    first, last = idx[0], idx[-1]
    if len(idx) > 1 and defined[first + 1]:
        slope = (values[first + 1] - values[first]) / (x[first + 1] - x[first])
        out[:first] = values[first] + slope * (x[:first] - x[first])
    if len(idx) > 1 and defined[last - 1]:
        slope = (values[last] - values[last - 1]) / (x[last] - x[last - 1])
        out[last + 1 :] = values[last] + slope * (x[last + 1 :] - x[last])
    return out


@dataclass(frozen=True)
class HydroState:
    """Density and action of a single particle on a grid.

    `phase_defined` marks the points where s was recovered from data (wave
    function or bridge pair); elsewhere s was filled in and carries no meaning.
    """

    grid: Grid1D
    rho: RealField
    s: RealField
    hbar: float = DEFAULT_HBAR
    mass: float = DEFAULT_MASS
    phase_defined: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("rho", "s"):
            if getattr(self, name).grid != self.grid:
                raise ValueError(f"{name} lives on a different grid")
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError(f"hbar and mass must be positive, got {self.hbar}, {self.mass}")
        rho = self.rho.values
        if not np.all(np.isfinite(rho)) or np.any(rho < 0):
            raise NormalizationError("density must be finite and non-negative")
        total = self.grid.integrate(rho)
        if abs(total - 1.0) > NORM_TOLERANCE:
            raise NormalizationError(f"density integrates to {total!r}, expected 1")
        if not np.all(np.isfinite(self.s.values[self.valid])):
            raise ValueError("action must be finite where the density is resolved")

    @classmethod
    def from_arrays(cls, grid, rho, s=None, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS, normalize=True):
        """Build a state from raw samples, normalizing rho on the grid by default."""
        rho = np.asarray(rho, dtype=float)
        if normalize:
            rho = rho / grid.integrate(rho)
        s = np.zeros(grid.n) if s is None else np.asarray(s, dtype=float)
        return cls(grid, RealField(grid, rho), RealField(grid, s), float(hbar), float(mass))

    @classmethod
    def gaussian(
        cls, grid, variance, center=0.0, p0=0.0, chirp=0.0, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS
    ):
        """Gaussian density with action s = p0 (x - c) + chirp (x - c)**2 / 2."""
        dx = grid.points - center
        rho = np.exp(-(dx**2) / (2.0 * variance))
        s = p0 * dx + 0.5 * chirp * dx**2
        return cls.from_arrays(grid, rho, s, hbar, mass)

    @property
    def valid(self):
        return density_mask(self.rho.values)

    def with_action(self, s):
        """Copy of the state with a new action."""
        return replace(self, s=self.s.with_values(s))


@dataclass(frozen=True)
class NlgtParam:
    """NLGT parameter alpha = alpha_r + i k pi / 2."""

    alpha_r: float = 0.0
    k: int = 0

    def __post_init__(self):
        if int(self.k) != self.k:
            raise DiscreteGaugeError(f"k must be an integer, got {self.k!r}")


@dataclass(frozen=True)
class BridgePair:
    """Forward function phi and backward function phi_hat with rho = phi * phi_hat.

    The optional log fields keep the pair exact where the functions underflow.
    """

    grid: Grid1D
    phi_fwd: RealField
    phi_bwd: RealField
    hbar: float = DEFAULT_HBAR
    mass: float = DEFAULT_MASS
    log_fwd: np.ndarray | None = field(default=None, repr=False, compare=False)
    log_bwd: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_logs(cls, grid, log_fwd, log_bwd, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
        log_fwd = np.asarray(log_fwd, dtype=float)
        log_bwd = np.asarray(log_bwd, dtype=float)
        return cls(
            grid,
            RealField(grid, np.exp(log_fwd)),
            RealField(grid, np.exp(log_bwd)),
            hbar,
            mass,
            log_fwd,
            log_bwd,
        )

    def logs(self):
        """(log phi, log phi_hat), taken from the stored logs when present."""
        with np.errstate(divide="ignore", invalid="ignore"):
            lf = self.log_fwd if self.log_fwd is not None else np.log(self.phi_fwd.values)
            lb = self.log_bwd if self.log_bwd is not None else np.log(self.phi_bwd.values)
        return lf, lb

    def density(self):
        """phi * phi_hat, summed in logs when both are stored."""
        if self.log_fwd is not None and self.log_bwd is not None:
            return RealField(self.grid, np.exp(self.log_fwd + self.log_bwd))
        return RealField(self.grid, self.phi_fwd.values * self.phi_bwd.values)

    def born_norm(self):
        """Integral of phi * phi_hat; one for a pair read from a normalized state."""
        return self.grid.integrate(self.density().values)

    def swapped(self):
        return BridgePair(
            self.grid,
            self.phi_bwd,
            self.phi_fwd,
            self.hbar,
            self.mass,
            self.log_bwd,
            self.log_fwd,
        )


def to_wavefunction(state):
    """psi = sqrt(rho) exp(i s / hbar)."""
    values = np.sqrt(state.rho.values) * np.exp(1j * state.s.values / state.hbar)
    return ComplexField(state.grid, values)


def from_wavefunction(psi, hbar=DEFAULT_HBAR, mass=DEFAULT_MASS):
    """Recover (rho, s) from a wave function.

    The phase is unwrapped over the points where the density is resolved and
    pinned to zero at the point of largest |psi|. Unresolved points are marked
    in `phase_defined` and their action is extended linearly from the resolved
    region.

    Raises:
        NormalizationError: |psi|**2 does not integrate to 1 within 1e-6.
    """
    grid = psi.grid
    values = psi.values
    rho = np.abs(values) ** 2
    total = grid.integrate(rho)
    if abs(total - 1.0) > 1e-6:
        raise NormalizationError(f"|psi|^2 integrates to {total!r}, expected 1")
    rho = rho / total

    defined = density_mask(rho)
    theta = np.zeros(grid.n)
    theta[defined] = np.unwrap(np.angle(values[defined]))
    theta -= theta[np.argmax(np.abs(values))]
    s = _fill_undefined(grid.points, hbar * theta, defined)
    return HydroState(grid, RealField(grid, rho), RealField(grid, s), hbar, mass, defined)


def to_bridge_pair(state):
    """(phi, phi_hat) = sqrt(rho) exp(-/+ s / hbar).

    Raises:
        ScalingError: |s| / hbar exceeds the overflow guard where rho is resolved.
    """
    ratio = np.abs(state.s.values) / state.hbar
    if np.any(ratio[state.valid] > ACTION_OVERFLOW):
        raise ScalingError(
            f"|s|/hbar reaches {ratio[state.valid].max():.3g}; the exponential pair "
            f"is limited to {ACTION_OVERFLOW:g}"
        )
    # Unresolved tails only need a finite exponent.
    reduced = np.clip(state.s.values / state.hbar, -ACTION_OVERFLOW, ACTION_OVERFLOW)
    with np.errstate(divide="ignore"):
        half_log = 0.5 * np.log(state.rho.values)
    return BridgePair.from_logs(
        state.grid, half_log - reduced, half_log + reduced, state.hbar, state.mass
    )


def from_bridge_pair(pair, normalize=False):
    """Recover (rho, s) from a bridge pair: rho = phi phi_hat, s = (hbar/2) ln(phi_hat/phi).

    Args:
        pair: BridgePair.
        normalize: Rescale rho to unit mass (interior pairs of a numerical
            bridge carry a small quadrature defect).
    """
    grid = pair.grid
    lf, lb = pair.logs()
    with np.errstate(invalid="ignore"):
        log_rho = lf + lb
        rho = np.exp(log_rho)
    rho = np.where(np.isfinite(rho), rho, 0.0)
    if normalize:
        rho = rho / grid.integrate(rho)

    defined = np.isfinite(lf) & np.isfinite(lb) & density_mask(rho)
    s = np.zeros(grid.n)
    s[defined] = 0.5 * pair.hbar * (lb[defined] - lf[defined])
    s = _fill_undefined(grid.points, s, defined)
    return HydroState(
        grid, RealField(grid, rho), RealField(grid, s), pair.hbar, pair.mass, defined
    )


def _real_parameter(param):
    if isinstance(param, NlgtParam):
        if param.k != 0:
            raise DiscreteGaugeError(
                f"apply_nlgt takes real parameters; use apply_discrete_nlgt for k={param.k}"
            )
        return float(param.alpha_r)
    return float(param)


def apply_nlgt(state, param):
    """Scale the action by exp(-alpha); the density is untouched.

    Args:
        state: HydroState.
        param: NlgtParam with k == 0, or a real alpha.
    """
    alpha = _real_parameter(param)
    return state.with_action(np.exp(-alpha) * state.s.values)


def imaginary_gauge_factor(k):
    """Action multiplier exp(-i k pi / 2) = (-i)**k of a discrete NLGT.

    Products of factors give compositions: two k=1 steps multiply s by -1,
    which is the k=2 (time reversal) action.
    """
    factors = {0: 1.0 + 0.0j, 1: -1.0j, 2: -1.0 + 0.0j, -1: 1.0j}
    if k not in factors:
        raise DiscreteGaugeError(f"discrete NLGT defined for k in {DISCRETE_K}, got {k!r}")
    return factors[k]


def time_reverse(psi):
    """The k=2 discrete NLGT on a wave function: psi -> psi*."""
    return psi.conjugate()


def apply_discrete_nlgt(state, k):
    """Representation reached by the imaginary parameter alpha = i k pi / 2.

    k=0 gives psi, k=2 gives psi* (time reversal), k=-1 gives the bridge pair
    (phi, phi_hat) and k=1 the swapped pair (tau reversal).
    """
    imaginary_gauge_factor(k)
    if k == 0:
        return to_wavefunction(state)
    if k == 2:
        return time_reverse(to_wavefunction(state))
    pair = to_bridge_pair(state)
    return pair if k == -1 else pair.swapped()


def nlgt_wavefunction(state, alpha_r, method="action"):
    """Wave function of the NLGT-transformed state.

    "action" rescales s and rebuilds psi; "power" evaluates
    psi**((1 + e^-a)/2) * conj(psi)**((1 - e^-a)/2) through the continuous phase
    log psi = ln(rho)/2 + i s/hbar, so no principal branch is involved.
    """
    if method == "action":
        return to_wavefunction(apply_nlgt(state, alpha_r))
    if method != "power":
        raise ValueError(f"method must be one of {NLGT_METHODS}, got {method!r}")
    shrink = np.exp(-alpha_r)
    a = 0.5 * (1.0 + shrink)
    b = 0.5 * (1.0 - shrink)
    with np.errstate(divide="ignore"):
        log_psi = 0.5 * np.log(state.rho.values) + 1j * state.s.values / state.hbar
    with np.errstate(invalid="ignore"):
        values = np.exp(a * log_psi + b * np.conj(log_psi))
    return ComplexField(state.grid, np.where(np.isfinite(values), values, 0.0))


def max_action_step(state):
    """Largest |s| change between neighbouring resolved grid points, zero if there are none."""
    idx = np.flatnonzero(state.valid)
    neighbours = np.diff(idx) == 1
    jumps = np.abs(np.diff(state.s.values[idx]))[neighbours]
    return float(jumps.max()) if jumps.size else 0.0


def action_gradient(state):
    """Gradient of the action.

    On periodic grids this is the probability current of the auxiliary wave
    function chi = sqrt(rho) exp(i s / h), with h chosen so that neighbouring
    resolved points differ by at most PHASE_STEP_LIMIT in phase. The result does not depend
    on h, is linear in s, and stays spectrally accurate for actions that are not
    periodic themselves (s = p0 x, s = x**2 / 2). Closed grids, constant
    actions and unresolved tails use second-order differences of s.
    """
    fd = gradient(state.s, spectral=False).values
    if not state.grid.is_periodic:
        return RealField(state.grid, fd)
    valid = state.valid
    step = max_action_step(state)
    if step == 0.0:
        logger.debug("action is constant on the resolved region")
        return RealField(state.grid, fd)
    scale = step / PHASE_STEP_LIMIT
    chi = np.sqrt(state.rho.values) * np.exp(1j * state.s.values / scale)
    dchi = gradient(ComplexField(state.grid, chi)).values
    current = scale * np.imag(np.conj(chi) * dchi)
    out = fd.copy()
    out[valid] = current[valid] / state.rho.values[valid]
    return RealField(state.grid, out)
