"""Uniform 1-D grids, quadrature, differentiation and spectral transforms."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft
from scipy.integrate import simpson

from bridgelab.config import TRUNCATION_STDS
from bridgelab.exceptions import GridError

CLOSED = "closed"
PERIODIC = "periodic"


def _is_power_of_two(n):
    return n > 0 and not n & (n - 1)


@dataclass(frozen=True)
class Grid1D:
    """Uniform lattice on [x_min, x_max].

    Closed grids include both end points and integrate with composite Simpson.
    Periodic grids exclude x_max, integrate with the rectangle rule and
    differentiate spectrally.
    """

    x_min: float
    x_max: float
    n: int
    mode: str = CLOSED

    def __post_init__(self):
        if self.mode not in (CLOSED, PERIODIC):
            raise GridError(f"unknown grid mode {self.mode!r}")
        if not self.x_max > self.x_min:
            raise GridError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")
        if self.mode == PERIODIC and (self.n < 8 or not _is_power_of_two(self.n)):
            raise GridError(f"periodic grids need n >= 8 and a power of two, got {self.n}")
        if self.mode == CLOSED and self.n < 2:
            raise GridError(f"closed grids need at least 2 points, got {self.n}")

    @classmethod
    def closed(cls, x_min, x_max, n):
        return cls(float(x_min), float(x_max), int(n), CLOSED)

    @classmethod
    def periodic(cls, x_min, x_max, n):
        return cls(float(x_min), float(x_max), int(n), PERIODIC)

    @classmethod
    def around(cls, variance, n, mode=CLOSED, center=0.0, stds=TRUNCATION_STDS):
        """Grid spanning `stds` standard deviations of a Gaussian of the given variance."""
        half = stds * np.sqrt(variance)
        return cls(center - half, center + half, int(n), mode)

    @property
    def is_periodic(self):
        return self.mode == PERIODIC

    @property
    def dx(self):
        span = self.x_max - self.x_min
        return span / self.n if self.is_periodic else span / (self.n - 1)

    @cached_property
    def points(self):
        x = self.x_min + self.dx * np.arange(self.n)
        x.setflags(write=False)
        return x

    @cached_property
    def weights(self):
        """Quadrature weights w such that integrate(f) == w @ f."""
        if self.is_periodic:
            w = np.full(self.n, self.dx)
        else:
            if self.n < 3:
                raise GridError("Simpson quadrature needs at least 3 points")
            # Simpson is linear in f, so integrating the identity yields its weights.
            w = simpson(np.eye(self.n), dx=self.dx, axis=-1)
        w.setflags(write=False)
        return w

    @cached_property
    def wavenumbers(self):
        k = 2.0 * np.pi * fft.fftfreq(self.n, d=self.dx)
        k.setflags(write=False)
        return k

    def integrate(self, values):
        """Quadrature of raw samples on this grid."""
        return self.weights @ np.asarray(values)

    def field(self, values):
        """Wrap samples in a RealField or ComplexField depending on dtype."""
        values = np.asarray(values)
        if np.iscomplexobj(values):
            return ComplexField(self, values)
        return RealField(self, values)


class _Field:
    """Immutable samples attached to a grid."""

    __slots__ = ("grid", "values")
    dtype = float

    def __init__(self, grid, values):
        values = np.array(values, dtype=self.dtype)
        if values.shape != (grid.n,):
            raise GridError(f"field has shape {values.shape}, grid expects ({grid.n},)")
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __repr__(self):
        return f"{type(self).__name__}(n={self.grid.n}, mode={self.grid.mode!r})"

    def __len__(self):
        return self.grid.n

    def __reduce__(self):
        return (type(self), (self.grid, self.values))

    def with_values(self, values):
        return type(self)(self.grid, values)


class RealField(_Field):
    """Real samples (densities, actions, bridge functions)."""

    __slots__ = ()
    dtype = float


class ComplexField(_Field):
    """Complex samples (wave functions, spectra)."""

    __slots__ = ()
    dtype = complex

    def conjugate(self):
        return ComplexField(self.grid, np.conj(self.values))


def integrate(f):
    """Integral of a field over its grid.

    Composite Simpson on closed grids (scipy's rule, with the end correction for
    an even number of points), rectangle rule on periodic grids.

    Raises:
        GridError: closed grid with fewer than 3 points.
    """
    return f.grid.integrate(f.values)


def _spectral_derivative(values, k, order):
    spectrum = fft.fft(values)
    multiplier = (1j * k) ** order
    if order % 2 and len(k) % 2 == 0:
        # The Nyquist mode has no odd derivative on a real signal.
        multiplier = multiplier.copy()
        multiplier[len(k) // 2] = 0.0
    out = fft.ifft(multiplier * spectrum)
    return out if np.iscomplexobj(values) else out.real


def _derivative(f, order, spectral):
    grid = f.grid
    if spectral is None:
        spectral = grid.is_periodic
    if spectral and not grid.is_periodic:
        raise GridError("spectral differentiation needs a periodic grid")
    if spectral:
        return f.with_values(_spectral_derivative(f.values, grid.wavenumbers, order))
    if order == 1:
        if grid.n < 3:
            raise GridError("second-order differences need at least 3 points")
        return f.with_values(np.gradient(f.values, grid.dx, edge_order=2))
    if grid.n < 4:
        raise GridError("second derivative needs at least 4 points")
    v = f.values
    d2 = np.empty_like(v)
    d2[1:-1] = v[2:] - 2.0 * v[1:-1] + v[:-2]
    d2[0] = 2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]
    d2[-1] = 2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]
    return f.with_values(d2 / grid.dx**2)


def gradient(f, spectral=None):
    """First derivative of a field.

    Args:
        f: RealField or ComplexField.
        spectral: Force (True) or forbid (False) spectral differentiation. The
            default follows the grid: spectral on periodic grids, central
            differences with second-order one-sided ends on closed grids.
            Fields that are not periodic (an action growing like x**2, say)
            must pass spectral=False.
    """
    return _derivative(f, 1, spectral)


def second_derivative(f, spectral=None):
    """Second derivative: spectral on periodic grids, three-point stencil otherwise."""
    return _derivative(f, 2, spectral)


def spectral_transform(f, direction="forward"):
    """Unitary discrete Fourier transform (1/sqrt(n) in both directions).

    Raises:
        GridError: closed grid, or n not a power of two.
    """
    grid = f.grid
    if not grid.is_periodic or not _is_power_of_two(grid.n):
        raise GridError("spectral transforms need a periodic grid with n a power of two")
    if direction == "forward":
        values = fft.fft(f.values, norm="ortho")
    elif direction == "inverse":
        values = fft.ifft(f.values, norm="ortho")
    else:
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    return ComplexField(grid, values)


def apply_multiplier(values, multiplier):
    """Multiply the spectrum of real or complex samples by `multiplier(k)` samples."""
    out = fft.ifft(multiplier * fft.fft(values))
    return out if np.iscomplexobj(values) else out.real
