"""Analytic pipelines on a :class:`NetworkConfig`.

Two regimes are covered:

* tail mode: blockage is on, and the session maximum of the end-to-end
  delay is described by a GEV built from the delay moments;
* guaranteed-LoS mode: a LoS link is always present and the full delay CDF
  is available.
"""

from __future__ import annotations

from dataclasses import dataclass

from .blockage import aleph, delta_coeff, p_los
from .channel import LinkBudget, link_budget
from .config import NetworkConfig
from .delay import DelayMoments, delay_moments, mean_plos_over_orientation, z_param
from .evt import GevParams, gev_cdf, gev_from_moments, tvar, var_quantile
from .numerics import GridCdf, GridDensity
from .reliability import default_grid, guaranteed_los_cdf, reliability


def los_z(config: NetworkConfig) -> float:
    """Disc-integrated blockage parameter used by the orientation-averaged LoS moments."""
    bp = config.blockage_params()
    a = aleph(delta_coeff(bp), bp.departure_rate, bp.interference_radius)
    return z_param(a, bp.sbs_density, bp.interference_radius)


def link(config: NetworkConfig) -> LinkBudget:
    return link_budget(config.channel_params())


def moments(config: NetworkConfig, guaranteed_los: bool = False) -> DelayMoments:
    z = None if guaranteed_los or not config.enabled else los_z(config)
    return delay_moments(link(config), config.queue_params(), z)


# --------------------------------------------------------------------------
# tail mode
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TailReport:
    moments: DelayMoments
    gev: GevParams
    p_los: float
    mean_p_los: float

    def var(self, alpha_c: float) -> float:
        return float(var_quantile(self.gev, alpha_c))

    def tvar(self, alpha_c: float) -> float:
        return tvar(self.gev, alpha_c)

    def reliability(self, delta: float) -> float:
        """Probability that the worst request of a session meets ``delta``."""
        return float(gev_cdf(self.gev, delta))


def tail_report(config: NetworkConfig, gev_mode: str = "identification") -> TailReport:
    m = moments(config)
    gev = gev_from_moments(m.mean_e2e, m.var_e2e, config.block_size, mode=gev_mode)
    return TailReport(
        moments=m,
        gev=gev,
        p_los=p_los(config.blockage_params()),
        mean_p_los=mean_plos_over_orientation(los_z(config)),
    )


# --------------------------------------------------------------------------
# guaranteed-LoS mode
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GuaranteedReport:
    cdf: GridCdf
    tx_pdf: GridDensity
    terms: int
    residual: float
    rate_los: float

    def reliability(self, delta: float) -> float:
        return reliability(self.cdf, delta)


def guaranteed_report(config: NetworkConfig, deltas=()) -> GuaranteedReport:
    lk = link(config)
    q = config.queue_params()
    m = moments(config, guaranteed_los=True)
    grid = default_grid(m.mean_e2e, deltas, config.grid_points, config.span_factor)
    cdf, tx, wait = guaranteed_los_cdf(lk, q, config.bandwidth, grid, config.series_tol)
    return GuaranteedReport(cdf, tx, wait.terms, wait.residual, lk.rate_los)


# --------------------------------------------------------------------------
# result rows
# --------------------------------------------------------------------------

def analyze_rows(config: NetworkConfig, mode: str, deltas=(), alphas=()) -> tuple[list[tuple], GridCdf | None]:
    """Rows ``(quantity, params_hash, value, units)`` and, in guaranteed-LoS mode, the CDF grid."""
    h = config.params_hash()
    rows: list[tuple] = []

    def add(q, v, u):
        rows.append((q, h, v if isinstance(v, int) else float(v), u))

    if mode == "tail":
        rep = tail_report(config)
        m = rep.moments
        add("rate_los", link(config).rate_los, "bit/s")
        add("p_los", rep.p_los, "1")
        add("mean_p_los_over_orientation", rep.mean_p_los, "1")
        add("mean_e2e", m.mean_e2e, "s")
        add("std_e2e", m.std_e2e, "s")
        add("block_size", config.block_size, "1")
        add("gev_location", rep.gev.mu_E, "s")
        add("gev_scale", rep.gev.sigma_E, "s")
        add("gev_shape", rep.gev.xi_E, "1")
        for a in alphas:
            add(f"var@{a:g}", rep.var(a), "s")
            add(f"tvar@{a:g}", rep.tvar(a), "s")
        for d in deltas:
            add(f"tail_reliability@{d:g}", rep.reliability(d), "1")
        return rows, None
    if mode == "guaranteed-los":
        rep = guaranteed_report(config, deltas)
        m = moments(config, guaranteed_los=True)
        add("rate_los", rep.rate_los, "bit/s")
        add("mean_e2e", m.mean_e2e, "s")
        add("tx_delay_mode", rep.tx_pdf.mode(), "s")
        add("series_terms", rep.terms, "1")
        add("series_residual", rep.residual, "1")
        for d in deltas:
            add(f"reliability@{d:g}", rep.reliability(d), "1")
        return rows, rep.cdf
    raise ValueError(f"unknown mode {mode!r}")
