"""Generalised extreme value tails of the session-maximum delay.

The per-session maximum of ``n`` request delays is modelled as a GEV whose
location and scale are the mean and standard deviation of a single delay.
The shape follows from requiring the GEV mean to equal the expected maximum
of ``n`` samples (a distribution-free upper bound on that maximum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as spi

from .errors import DataError, DomainError, ModelDomainError
from .numerics import find_root, ln_gamma, lower_incomplete_gamma

_XI_ZERO = 1e-10


@dataclass(frozen=True)
class GevParams:
    """Location, scale and shape of a GEV law, plus the block size it describes."""

    mu_E: float
    sigma_E: float
    xi_E: float
    n: int | None = None

    def __post_init__(self):
        if not self.sigma_E > 0:
            raise DomainError(f"GEV scale must be positive, got {self.sigma_E!r}")
        if self.n is not None and self.n < 1:
            raise DomainError("block size must be positive")

    @property
    def lower_endpoint(self) -> float:
        return self.mu_E - self.sigma_E / self.xi_E if self.xi_E > 0 else -math.inf

    def mean(self) -> float:
        return gev_mean(self)


def order_stat_mean(mean: float, variance: float, n: int) -> float:
    """Upper bound on the expected maximum of ``n`` samples with given mean and variance."""
    if variance < 0:
        raise DomainError("variance must be nonnegative")
    if n < 1:
        raise DomainError("n must be at least 1")
    return mean + (n - 1) * math.sqrt(variance) / math.sqrt(2 * n - 1)


def shape_rhs(n: int) -> float:
    return math.sqrt(2 * n - 1) / (n - 1)


def _shape_lhs(xi: float) -> float:
    # xi / (Gamma(1 - xi) - 1); expm1 keeps precision near xi = 0
    return xi / math.expm1(ln_gamma(1.0 - xi))


def solve_shape(n: int, tol: float = 1e-14) -> float:
    """Shape parameter for sessions of ``n`` requests.

    The map ``xi -> xi / (Gamma(1 - xi) - 1)`` decreases from the inverse
    Euler-Mascheroni constant at 0 to 0 at 1, so a root in (0, 1) exists
    once the right-hand side falls below that limit.
    """
    if int(n) != n or n < 3:
        raise DomainError(
            f"shape equation needs n >= 3 requests per session, got {n!r}; for n <= 2 the "
            "right-hand side sqrt(2n-1)/(n-1) is not below the xi -> 0 limit by a usable margin"
        )
    rhs = shape_rhs(int(n))
    lo, hi = 1e-12, 1.0 - 1e-15
    return find_root(lambda x: _shape_lhs(x) - rhs, lo, hi, tol)


def gev_mean(p: GevParams) -> float:
    xi = p.xi_E
    if xi >= 1:
        return math.inf
    if abs(xi) < _XI_ZERO:
        return p.mu_E + p.sigma_E * np.euler_gamma
    return p.mu_E + p.sigma_E * math.expm1(ln_gamma(1.0 - xi)) / xi


def gev_variance(p: GevParams) -> float:
    xi = p.xi_E
    if xi >= 0.5:
        return math.inf
    if abs(xi) < _XI_ZERO:
        return (p.sigma_E * math.pi) ** 2 / 6.0
    g1 = math.exp(ln_gamma(1.0 - xi))
    g2 = math.exp(ln_gamma(1.0 - 2.0 * xi))
    return p.sigma_E**2 * (g2 - g1 * g1) / xi**2


def gev_from_moments(mean: float, variance: float, n: int, mode: str = "identification") -> GevParams:
    """GEV of the session maximum from the mean and variance of one delay.

    ``mode="identification"`` sets location = mean and scale = standard
    deviation. ``mode="exact"`` keeps the shape but chooses location and
    scale so that the GEV mean equals :func:`order_stat_mean` and the GEV
    variance equals ``variance`` (needs shape < 1/2).
    """
    if not variance > 0:
        raise DomainError("variance must be positive")
    xi = solve_shape(n)
    if mode == "identification":
        return GevParams(mean, math.sqrt(variance), xi, int(n))
    if mode == "exact":
        if xi >= 0.5:
            raise ModelDomainError(f"GEV variance is infinite for shape {xi:.4f}",
                                   expression="xi_E < 1/2")
        unit = GevParams(0.0, 1.0, xi)
        sigma = math.sqrt(variance / gev_variance(unit))
        mu = order_stat_mean(mean, variance, n) - sigma * gev_mean(unit)
        return GevParams(mu, sigma, xi, int(n))
    raise DomainError(f"unknown mode {mode!r}")


def _standardise(p: GevParams, x):
    return (np.asarray(x, dtype=float) - p.mu_E) / p.sigma_E


def gev_cdf(p: GevParams, x):
    z = _standardise(p, x)
    xi = p.xi_E
    if abs(xi) < _XI_ZERO:
        out = np.exp(-np.exp(-z))
    else:
        t = 1.0 + xi * z
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            inside = np.exp(-np.power(np.where(t > 0, t, 1.0), -1.0 / xi))
        outside = 0.0 if xi > 0 else 1.0
        out = np.where(t > 0, inside, outside)
    return float(out) if out.ndim == 0 else out


def gev_pdf(p: GevParams, x):
    z = _standardise(p, x)
    xi = p.xi_E
    if abs(xi) < _XI_ZERO:
        out = np.exp(-z - np.exp(-z)) / p.sigma_E
    else:
        t = 1.0 + xi * z
        ts = np.where(t > 0, t, 1.0)
        with np.errstate(over="ignore"):
            v = np.power(ts, -1.0 / xi)
            out = np.where(t > 0, v / ts * np.exp(-v) / p.sigma_E, 0.0)
    return float(out) if out.ndim == 0 else out


def var_quantile(p: GevParams, alpha_c):
    """Value-at-risk: the GEV quantile at confidence ``alpha_c``."""
    a = np.asarray(alpha_c, dtype=float)
    if np.any((a <= 0) | (a >= 1)):
        raise DomainError("alpha_c must lie in (0, 1)")
    y = -np.log(a)
    xi = p.xi_E
    if abs(xi) < _XI_ZERO:
        out = p.mu_E - p.sigma_E * np.log(y)
    else:
        out = p.mu_E + p.sigma_E / xi * np.expm1(-xi * np.log(y))
    return float(out) if out.ndim == 0 else out


def tvar(p: GevParams, alpha_c: float) -> float:
    """Tail value-at-risk: mean of the GEV beyond its ``alpha_c`` quantile."""
    if not 0 < alpha_c < 1:
        raise DomainError("alpha_c must lie in (0, 1)")
    xi = p.xi_E
    if xi >= 1:
        raise ModelDomainError(f"tail mean is infinite for shape {xi:.4f}", expression="xi_E < 1")
    tail = 1.0 - alpha_c
    if abs(xi) < _XI_ZERO:
        body, _ = spi.quad(lambda u: var_quantile(p, u), alpha_c, 1.0, limit=200)
        return body / tail
    g = lower_incomplete_gamma(1.0 - xi, -math.log(alpha_c))
    return p.mu_E + p.sigma_E / (tail * xi) * (g - tail)


# --------------------------------------------------------------------------
# fitting from data
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockFit:
    params: GevParams
    maxima: np.ndarray
    method: str


def block_maxima(samples, n: int) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    blocks = x.size // n
    if blocks == 0:
        return np.zeros(0)
    return x[: blocks * n].reshape(blocks, n).max(axis=1)


def fit_block_maxima(samples, n: int, block: int = 1, method: str = "auto",
                     min_blocks: int = 20) -> BlockFit:
    """Fit a GEV with shape fixed by ``n`` to block maxima of ``samples``.

    ``block`` consecutive samples form one block (``block=1`` when the
    samples are already maxima). Location and scale are matched to two
    statistics of the maxima:

    ``"moments"``
        mean and variance (needs shape < 1/2),
    ``"lmoments"``
        mean and the second L-moment (finite for shape < 1),
    ``"quantiles"``
        median and upper quartile.

    ``"auto"`` picks L-moments below shape 1/2 and quantiles above, where
    sample moments converge too slowly to be useful.
    """
    maxima = block_maxima(samples, block)
    if maxima.size < min_blocks:
        raise DataError(f"need at least {min_blocks} complete blocks, got {maxima.size}")
    if np.ptp(maxima) == 0:
        raise DataError("block maxima have zero variance")
    xi = solve_shape(n)
    unit = GevParams(0.0, 1.0, xi)
    if method == "auto":
        method = "lmoments" if xi < 0.5 else "quantiles"
    if method == "moments":
        if xi >= 0.5:
            raise ModelDomainError("moment fit needs a finite GEV variance", expression="xi_E < 1/2")
        sigma = math.sqrt(np.var(maxima, ddof=1) / gev_variance(unit))
        mu = float(np.mean(maxima)) - sigma * gev_mean(unit)
    elif method == "lmoments":
        x = np.sort(maxima)
        m = x.size
        b0 = x.mean()
        b1 = np.sum(np.arange(m) / (m - 1) * x) / m
        l2 = 2.0 * b1 - b0
        unit_l2 = math.expm1(xi * math.log(2.0)) * math.exp(ln_gamma(1.0 - xi)) / xi
        sigma = l2 / unit_l2
        mu = b0 - sigma * gev_mean(unit)
    elif method == "quantiles":
        q50, q75 = np.quantile(maxima, [0.5, 0.75])
        u50, u75 = var_quantile(unit, 0.5), var_quantile(unit, 0.75)
        sigma = (q75 - q50) / (u75 - u50)
        mu = q50 - sigma * u50
    else:
        raise DomainError(f"unknown method {method!r}")
    return BlockFit(GevParams(float(mu), float(sigma), xi, int(n)), maxima, method)


def empirical_tvar(samples, alpha_c: float, min_tail: float = 10.0) -> float:
    """Mean of the samples strictly above their ``alpha_c`` quantile (linear interpolation).

    At least ``min_tail / (1 - alpha_c)`` samples are required, i.e.
    ``min_tail`` expected exceedances.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if not 0 < alpha_c < 1:
        raise DomainError("alpha_c must lie in (0, 1)")
    need = math.ceil(min_tail / (1.0 - alpha_c) - 1e-9)
    if x.size < need:
        raise DataError(f"empirical TVaR at {alpha_c} needs at least {need} samples, got {x.size}")
    q = np.quantile(x, alpha_c)
    above = x[x > q]
    if above.size == 0:
        return float(q)
    return float(above.mean())
