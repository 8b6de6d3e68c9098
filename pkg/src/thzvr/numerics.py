"""Special functions, root finding, quadrature and grid convolution.

Densities and CDFs that flow through the delay analysis live on uniform time
grids. :class:`GridDensity` renormalises on construction and keeps the mass it
had before renormalisation so truncated supports are visible instead of being
silently absorbed.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq

from .errors import BracketError, DomainError, GridError

log = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 2**14
DEFAULT_SPAN_FACTOR = 20.0
MASS_TOLERANCE = 1e-3
MASS_WARNING_LEVEL = 0.01


class MassLossWarning(UserWarning):
    """More than 1% of a density's mass fell outside its grid."""


# --------------------------------------------------------------------------
# special functions
# --------------------------------------------------------------------------

def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def _series_p(s: float, x: float) -> float:
    # regularised P(s, x) by the power series, good for x < s + 1
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))


def _continued_fraction_q(s: float, x: float) -> float:
    # regularised Q(s, x) by Lentz's continued fraction, good for x >= s + 1
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + s * math.log(x) - math.lgamma(s)) * h


def regularized_lower_gamma(s: float, x: float) -> float:
    """P(s, x) = gamma(s, x) / Gamma(s)."""
    if not s > 0:
        raise DomainError(f"incomplete gamma requires s > 0, got s={s!r}")
    if not x >= 0:
        raise DomainError(f"incomplete gamma requires x >= 0, got x={x!r}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < s + 1.0:
        return _series_p(s, x)
    return 1.0 - _continued_fraction_q(s, x)


def lower_incomplete_gamma(s: float, x: float) -> float:
    """Unregularised lower incomplete gamma, the integral of t**(s-1) e**-t over [0, x].

    Uses the power series below ``s + 1`` and the continued fraction above it.
    """
    if not s > 0:
        raise DomainError(f"incomplete gamma requires s > 0, got s={s!r}")
    if not x >= 0:
        raise DomainError(f"incomplete gamma requires x >= 0, got x={x!r}")
    if x == 0.0:
        return 0.0
    if x < s + 1.0:
        # keep the series unregularised to avoid cancellation for tiny x
        term = 1.0 / s
        total = term
        ap = s
        for _ in range(_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _EPS:
                break
        return total * math.exp(-x + s * math.log(x))
    return math.exp(math.lgamma(s)) * (1.0 - _continued_fraction_q(s, x))


# --------------------------------------------------------------------------
# root finding and quadrature
# --------------------------------------------------------------------------

def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Bracketed root of ``f`` on ``[lo, hi]`` (Brent's method)."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f(lo)={flo:g}, f(hi)={fhi:g}")
    return brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


def integrate(values, grid) -> float:
    """Trapezoid integral of ``values`` sampled on ``grid``."""
    values = np.asarray(values, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        raise DomainError("integrate needs at least two grid points")
    if values.shape != grid.shape:
        raise GridError("values and grid must have the same shape")
    if np.any(np.diff(grid) <= 0):
        raise GridError("grid must be strictly increasing")
    return float(np.trapezoid(values, grid))


# --------------------------------------------------------------------------
# grid carriers
# --------------------------------------------------------------------------

def uniform_grid(t_max: float, points: int = DEFAULT_GRID_POINTS, t_min: float = 0.0) -> np.ndarray:
    if points < 2 or not t_max > t_min:
        raise GridError(f"bad grid request: [{t_min}, {t_max}] with {points} points")
    return np.linspace(t_min, t_max, points)


def _check_grid(grid: np.ndarray) -> None:
    if grid.ndim != 1 or grid.size < 2:
        raise GridError("grid must be one-dimensional with at least two points")
    if np.any(np.diff(grid) <= 0):
        raise GridError("grid must be strictly increasing")


def grid_step(grid: np.ndarray, rtol: float = 1e-6) -> float:
    """Spacing of a uniform grid; raises :class:`GridError` for non-uniform grids."""
    d = np.diff(grid)
    h = (grid[-1] - grid[0]) / (grid.size - 1)
    if np.max(np.abs(d - h)) > rtol * h:
        raise GridError("grid is not uniform")
    return float(h)


@dataclass(frozen=True)
class GridDensity:
    """Probability density tabulated on a strictly increasing grid.

    ``raw_mass`` is the trapezoid mass before renormalisation.
    """

    grid: np.ndarray
    values: np.ndarray
    raw_mass: float = 1.0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        _check_grid(grid)
        if values.shape != grid.shape:
            raise GridError("density values and grid differ in length")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise GridError("density values must be finite and nonnegative")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        mass = np.trapezoid(values, grid)
        if abs(mass - 1.0) > MASS_TOLERANCE:
            raise GridError(f"density mass {mass:.6g} is not 1; build it with GridDensity.normalized")

    @classmethod
    def normalized(cls, grid, values, label: str = "") -> "GridDensity":
        grid = np.asarray(grid, dtype=float)
        values = np.clip(np.asarray(values, dtype=float), 0.0, None)
        mass = float(np.trapezoid(values, grid))
        if not mass > 0:
            raise GridError(f"density {label or ''} has no mass on the grid")
        _log_renormalisation(mass, label)
        return cls(grid, values / mass, raw_mass=mass, label=label)

    @property
    def step(self) -> float:
        return grid_step(self.grid)

    def mean(self) -> float:
        return float(np.trapezoid(self.grid * self.values, self.grid))

    def moment(self, k: int) -> float:
        return float(np.trapezoid(self.grid**k * self.values, self.grid))

    def mode(self) -> float:
        return float(self.grid[np.argmax(self.values)])

    def cdf(self) -> "GridCdf":
        cum = cumulative_trapezoid(self.values, self.grid, initial=0.0)
        return GridCdf(self.grid, np.clip(cum, 0.0, 1.0), label=self.label)

    def __call__(self, t):
        return np.interp(t, self.grid, self.values, left=0.0, right=0.0)

    def resample(self, grid) -> "GridDensity":
        """Linear interpolation onto ``grid``, then renormalise."""
        grid = np.asarray(grid, dtype=float)
        return GridDensity.normalized(grid, self(grid), label=self.label)

    def shifted(self, offset: float) -> "GridDensity":
        return GridDensity(self.grid + offset, self.values, raw_mass=self.raw_mass, label=self.label)

    def truncate(self, t_max: float) -> "GridDensity":
        keep = self.grid <= t_max * (1 + 1e-12)
        return GridDensity.normalized(self.grid[keep], self.values[keep], label=self.label)


@dataclass(frozen=True)
class GridCdf:
    """Cumulative distribution tabulated on a strictly increasing grid."""

    grid: np.ndarray
    values: np.ndarray
    label: str = field(default="", compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        _check_grid(grid)
        if values.shape != grid.shape:
            raise GridError("cdf values and grid differ in length")
        if values[0] < 0 or values[-1] > 1 + 1e-6 or np.any(np.diff(values) < 0):
            raise GridError("cdf must be non-decreasing within [0, 1]")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, grid, values, label: str = "") -> "GridCdf":
        """Clip to [0, 1] and enforce monotonicity (running maximum)."""
        values = np.maximum.accumulate(np.clip(np.asarray(values, dtype=float), 0.0, 1.0))
        return cls(np.asarray(grid, dtype=float), values, label=label)

    def __call__(self, t):
        return np.interp(t, self.grid, self.values, left=0.0, right=self.values[-1])

    def density(self) -> GridDensity:
        """Central differences inside, one-sided at the two ends."""
        return GridDensity.normalized(self.grid, np.gradient(self.values, self.grid), label=self.label)

    def mean(self) -> float:
        # E[T] = integral of the survival function for T >= 0
        if self.grid[0] < 0:
            raise GridError("mean via survival integral needs a nonnegative grid")
        survival = 1.0 - self.values
        return float(self.grid[0] + np.trapezoid(survival, self.grid))


def _log_renormalisation(mass: float, label: str) -> None:
    loss = 1.0 - mass
    log.debug("renormalising density %s: pre-normalisation mass %.9f", label or "<unnamed>", mass)
    if loss > MASS_WARNING_LEVEL:
        warnings.warn(
            f"density {label or '<unnamed>'} had mass {mass:.4f} on its grid before renormalisation",
            MassLossWarning,
            stacklevel=3,
        )


def convolve_values(a: np.ndarray, b: np.ndarray, h: float, n_out: int | None = None) -> np.ndarray:
    """Trapezoid-rule convolution of two sampled functions on a common step ``h``.

    Output index ``k`` approximates the integral of ``a(s) b(kh - s)``; end
    points of each integration range get half weight. ``n_out`` truncates.
    """
    na, nb = a.size, b.size
    full = h * np.convolve(a, b)
    k = np.arange(full.size)
    lo = np.maximum(0, k - (nb - 1))
    hi = np.minimum(k, na - 1)
    full -= 0.5 * h * (a[lo] * b[k - lo] + a[hi] * b[k - hi])
    if n_out is not None:
        full = full[:n_out]
    return full


def convolve(a: GridDensity, b: GridDensity, label: str = "") -> GridDensity:
    """Density of the sum of independent variables with densities ``a`` and ``b``.

    Both grids need the same uniform step. The result lives on the full sum of
    the supports; trapezoid end weights are applied per output point.
    """
    h = a.step
    hb = b.step
    if abs(h - hb) > 1e-9 * max(h, hb):
        raise GridError(f"grid steps differ: {h:g} vs {hb:g}; resample first")
    out = np.clip(convolve_values(a.values, b.values, h), 0.0, None)
    grid = a.grid[0] + b.grid[0] + h * np.arange(out.size)
    return GridDensity.normalized(grid, out, label=label or f"{a.label}*{b.label}")


def point_mass(t0: float, grid) -> GridDensity:
    """Near-delta at the grid point closest to ``t0``, with unit trapezoid mass."""
    grid = np.asarray(grid, dtype=float)
    h = grid_step(grid)
    values = np.zeros_like(grid)
    i = int(np.argmin(np.abs(grid - t0)))
    values[i] = (2.0 if i in (0, grid.size - 1) else 1.0) / h
    return GridDensity(grid, values, raw_mass=1.0, label=f"delta({t0:g})")


def cumulative(density: GridDensity) -> GridCdf:
    return density.cdf()
