"""Delay distribution when a LoS link is always available.

The transmission delay inherits its law from the Gaussian interference
through the rate map ``alpha = L / (W log2(1 + p_rx / (N0 + I)))``. The
base-station queue is M/G/1, so its waiting time follows the
Pollaczek-Khinchine series in the residual service law. The end-to-end CDF
adds the exponential sojourn of the edge queue.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import ndtr

from .channel import LinkBudget
from .delay import QueueParams
from .errors import ConfigError, DomainError, InstabilityError
from .numerics import (
    DEFAULT_GRID_POINTS,
    DEFAULT_SPAN_FACTOR,
    GridCdf,
    GridDensity,
    convolve_values,
    grid_step,
    point_mass,
    uniform_grid,
)

log = logging.getLogger(__name__)

LN2 = math.log(2.0)
DEFAULT_TOL = 1e-8
SIGMA_SPAN = 8.0


class ThresholdBeyondGridWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ReliabilityReport:
    delta: float
    reliability: float
    e2e_cdf: GridCdf
    tx_pdf: GridDensity
    truncation_terms: int
    truncation_residual: float


# --------------------------------------------------------------------------
# transmission delay
# --------------------------------------------------------------------------

def delay_to_interference(alpha, link: LinkBudget, L: float, W: float):
    """Interference level at which the LoS rate delivers ``L`` bits in ``alpha`` seconds."""
    alpha = np.asarray(alpha, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        gm1 = np.expm1(LN2 * L / (W * alpha))
        return link.p_rx / gm1 - link.N0


def interference_to_delay(interference, link: LinkBudget, L: float, W: float):
    sinr = link.p_rx / (link.N0 + np.asarray(interference, dtype=float))
    return L / (W * np.log2(1.0 + sinr))


def tx_delay_support(link: LinkBudget, L: float, W: float, span: float = SIGMA_SPAN) -> tuple[float, float]:
    """Delays matching interference 0 and ``mu_I + span * sigma_I``."""
    top = link.mu_I + span * link.sigma_I
    return float(interference_to_delay(0.0, link, L, W)), float(interference_to_delay(top, link, L, W))


def tx_delay_pdf(link: LinkBudget, L: float, W: float, grid=None, points: int = 4096) -> GridDensity:
    """Density of the transmission delay under Normal interference truncated at zero.

    ``grid`` defaults to a uniform grid on the delay range that maps to
    interference in ``[0, mu_I + 8 sigma_I]``.
    """
    if grid is None:
        lo, hi = tx_delay_support(link, L, W)
        grid = np.linspace(lo, hi, points)
    grid = np.asarray(grid, dtype=float)
    sigma = link.sigma_I
    if sigma == 0:
        return point_mass(L / link.rate_los, grid)
    pos = grid > 0
    dens = np.zeros_like(grid)
    with np.errstate(over="ignore", invalid="ignore"):
        e = LN2 * L / (W * grid[pos])
        gm1 = np.expm1(e)
        upsilon = link.p_rx / gm1 - link.N0
        # d(upsilon)/d(alpha), with exp(e)/(exp(e)-1)^2 = 1/gm1 + 1/gm1^2
        jac = LN2 * L * link.p_rx / (W * grid[pos] ** 2) * (1.0 / gm1 + 1.0 / gm1**2)
        z = (upsilon - link.mu_I) / sigma
        d = jac * np.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * sigma)
        d = np.where(np.isfinite(d) & (upsilon >= 0), d, 0.0)
    dens[pos] = d
    # condition on nonnegative interference
    dens /= ndtr(link.mu_I / sigma)
    return GridDensity.normalized(grid, dens, label="tx_delay")


# --------------------------------------------------------------------------
# base-station queue
# --------------------------------------------------------------------------

def _on_grid(density: GridDensity, grid: np.ndarray) -> np.ndarray:
    """Density values on ``grid``, linear interpolation, zero outside."""
    return np.interp(grid, density.grid, density.values, left=0.0, right=0.0)


def residual_service_cdf(tx_pdf: GridDensity, mu2: float, grid) -> GridCdf:
    """Equilibrium (residual) service-time CDF, the integral of ``mu2 (1 - Psi_T)``."""
    grid = np.asarray(grid, dtype=float)
    mean = tx_pdf.mean()
    if abs(mu2 * mean - 1.0) > 0.01:
        raise ConfigError(f"mu2 = {mu2:g} is inconsistent with the service mean {mean:g} s (1% rule)")
    survival = 1.0 - tx_pdf.cdf()(grid)
    r = cumulative_trapezoid(mu2 * survival, grid, initial=0.0)
    return GridCdf.from_values(grid, r, label="residual_service")


@dataclass(frozen=True)
class WaitResult:
    wait_cdf: GridCdf
    total_density: GridDensity
    atom_at_zero: float
    terms: int
    residual: float
    rho: float = 0.0

    @property
    def total_cdf(self) -> GridCdf:
        return self.total_density.cdf()


def series_terms(rho: float, tol: float) -> int:
    """Smallest N with rho^(N+1) / (1 - rho) < tol."""
    if rho == 0:
        return 0
    n = 0
    while rho ** (n + 1) / (1 - rho) >= tol:
        n += 1
    return n


def mg1_wait_cdf(tx_pdf: GridDensity, lam2: float, grid, tol: float = DEFAULT_TOL) -> WaitResult:
    """Waiting-time CDF of the M/G/1 base-station queue by the Pollaczek-Khinchine series.

    ``grid`` must be uniform and start at 0. The atom ``1 - rho`` at zero
    is stored in the first CDF value. The returned total-time density is
    the waiting time convolved with the service time.
    """
    grid = np.asarray(grid, dtype=float)
    h = grid_step(grid)
    if abs(grid[0]) > 1e-15:
        raise DomainError("queue grid must start at 0")
    mean = tx_pdf.mean()
    rho = lam2 * mean
    if not rho < 1:
        raise InstabilityError(f"base-station queue unstable: rho2 = {rho:.6g} >= 1", rho=rho)
    mu2 = 1.0 / mean
    n = grid.size
    svc = _on_grid(tx_pdf, grid)
    cdf_t = np.clip(cumulative_trapezoid(svc, grid, initial=0.0), 0.0, 1.0)
    r_dens = mu2 * (1.0 - cdf_t)
    terms = series_terms(rho, tol)
    cont = np.zeros(n)  # continuous part of the waiting density
    power = r_dens.copy()
    for k in range(1, terms + 1):
        if k > 1:
            power = convolve_values(power, r_dens, h, n)
        cont += (1.0 - rho) * rho**k * power
    atom = 1.0 - rho
    wait = atom + cumulative_trapezoid(cont, grid, initial=0.0)
    residual = rho ** (terms + 1)
    total = atom * svc + convolve_values(cont, svc, h, n)
    return WaitResult(
        wait_cdf=GridCdf.from_values(grid, wait, label="q2_wait"),
        total_density=GridDensity.normalized(grid, np.clip(total, 0.0, None), label="q2_total"),
        atom_at_zero=atom,
        terms=terms,
        residual=residual,
        rho=rho,
    )


# --------------------------------------------------------------------------
# end-to-end
# --------------------------------------------------------------------------

def e2e_cdf(queue: QueueParams, q2_total_cdf: GridCdf, grid=None) -> GridCdf:
    """CDF of edge sojourn plus base-station time plus the constant beam delay.

    The base-station CDF is differentiated by central differences; any mass
    at the first grid point is treated as an atom.
    """
    grid = q2_total_cdf.grid if grid is None else np.asarray(grid, dtype=float)
    if not np.array_equal(grid, q2_total_cdf.grid):
        q2_total_cdf = GridCdf.from_values(grid, q2_total_cdf(grid))
    h = grid_step(grid)
    g = queue.q1_gap
    atom = float(q2_total_cdf.values[0])
    dens = np.clip(np.gradient(q2_total_cdf.values - atom, grid), 0.0, None)
    t = grid - grid[0]
    edge = g * np.exp(-g * t)
    cont = convolve_values(edge, dens, h, grid.size)
    phi = atom * -np.expm1(-g * t) + cumulative_trapezoid(cont, grid, initial=0.0)
    b = queue.beam_tracking_delay
    if b > 0:
        phi = np.interp(grid - b, grid, phi, left=0.0)
    return GridCdf.from_values(grid, phi, label="e2e")


def e2e_cdf_from_density(queue: QueueParams, q2_total: GridDensity) -> GridCdf:
    """Same as :func:`e2e_cdf` but starting from the base-station density."""
    grid = q2_total.grid
    h = grid_step(grid)
    g = queue.q1_gap
    t = grid - grid[0]
    cont = convolve_values(g * np.exp(-g * t), q2_total.values, h, grid.size)
    phi = cumulative_trapezoid(cont, grid, initial=0.0)
    b = queue.beam_tracking_delay
    if b > 0:
        phi = np.interp(grid - b, grid, phi, left=0.0)
    return GridCdf.from_values(grid, phi, label="e2e")


def reliability(cdf: GridCdf, delta: float) -> float:
    """Probability that the end-to-end delay does not exceed ``delta``."""
    if delta < 0:
        raise DomainError("delta must be nonnegative")
    if delta > cdf.grid[-1]:
        warnings.warn(f"delta {delta:g} s beyond grid end {cdf.grid[-1]:g} s; clamped",
                      ThresholdBeyondGridWarning, stacklevel=2)
        return float(cdf.values[-1])
    return float(cdf(delta))


def default_grid(mean_e2e: float, deltas=(), points: int = DEFAULT_GRID_POINTS,
                 span_factor: float = DEFAULT_SPAN_FACTOR) -> np.ndarray:
    t_max = span_factor * mean_e2e
    if len(deltas):
        t_max = max(t_max, 1.25 * max(deltas))
    return uniform_grid(t_max, points)


def guaranteed_los_cdf(link: LinkBudget, queue: QueueParams, bandwidth: float, grid=None,
                       tol: float = DEFAULT_TOL, deltas=()) -> tuple[GridCdf, GridDensity, WaitResult]:
    """Full pipeline: transmission density, base-station queue, end-to-end CDF."""
    queue.validate()
    L = queue.content_bits
    if grid is None:
        support = tx_delay_pdf(link, L, bandwidth)
        rho = queue.lambda2 * support.mean()
        if not rho < 1:
            raise InstabilityError(f"base-station queue unstable: rho2 = {rho:.6g} >= 1", rho=rho)
        approx_mean = 1.0 / queue.q1_gap + support.mean() / (1 - rho) + queue.beam_tracking_delay
        grid = default_grid(approx_mean, deltas)
    grid = np.asarray(grid, dtype=float)
    tx = tx_delay_pdf(link, L, bandwidth, grid)
    if tx.raw_mass < 0.99:
        log.warning("transmission-delay density lost %.3g of its mass on the grid", 1 - tx.raw_mass)
    wait = mg1_wait_cdf(tx, queue.lambda2, grid, tol)
    cdf = e2e_cdf_from_density(queue, wait.total_density)
    return cdf, tx, wait


def reliability_report(link: LinkBudget, queue: QueueParams, bandwidth: float, delta: float,
                       grid=None, tol: float = DEFAULT_TOL) -> ReliabilityReport:
    cdf, tx, wait = guaranteed_los_cdf(link, queue, bandwidth, grid, tol, deltas=(delta,))
    return ReliabilityReport(
        delta=delta,
        reliability=reliability(cdf, delta),
        e2e_cdf=cdf,
        tx_pdf=tx,
        truncation_terms=wait.terms,
        truncation_residual=wait.residual,
    )
