"""THz link budget: spreading and absorption loss, noise, interference, rate.

All quantities are in SI base units (Hz, W, m, K, bit/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError

SPEED_OF_LIGHT = 299_792_458.0
BOLTZMANN = 1.380649e-23


@dataclass(frozen=True)
class ChannelParams:
    """Parameters of the tagged link and its interference field.

    Attributes
    ----------
    frequency : float
        Carrier frequency in Hz.
    absorption : float
        Molecular absorption coefficient in 1/m.
    bandwidth : float
        Channel bandwidth in Hz.
    p_tx : float
        Transmit power of the serving base station in W.
    p_interferer : float
        Common transmit power of interfering base stations in W.
    temperature : float
        System temperature in K.
    link_distance : float
        Distance between user and serving base station in m.
    interference_radius : float
        Radius beyond which interference is neglected, in m.
    hard_core : float
        Minimum separation of base stations in m.
    sbs_density : float
        Base-station intensity in 1/m^2.
    """

    frequency: float = 1e12
    absorption: float = 0.0016
    bandwidth: float = 10e9
    p_tx: float = 1.0
    p_interferer: float = 1.0
    temperature: float = 300.0
    link_distance: float = 1.0
    interference_radius: float = 6.5
    hard_core: float = 1.0
    sbs_density: float = 0.25

    def validate(self) -> "ChannelParams":
        for name in ("frequency", "bandwidth", "p_tx", "p_interferer", "temperature",
                     "link_distance", "interference_radius", "hard_core"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be positive and finite, got {v!r}")
        if not self.absorption >= 0:
            raise ConfigError(f"absorption must be nonnegative, got {self.absorption!r}")
        if not self.sbs_density >= 0:
            raise ConfigError(f"sbs_density must be nonnegative, got {self.sbs_density!r}")
        if self.interference_radius <= self.hard_core:
            raise ConfigError("interference_radius must exceed hard_core (Omega > eps)")
        if self.link_distance > self.interference_radius:
            raise ConfigError("link_distance must not exceed interference_radius (r0 <= Omega)")
        return self

    def with_(self, **changes) -> "ChannelParams":
        return replace(self, **changes)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def spreading_gain(self) -> float:
        """A0 = c^2 / (16 pi^2 f^2), the inverse spreading loss at 1 m."""
        return spreading_gain(self.frequency)


@dataclass(frozen=True)
class LinkBudget:
    path_loss: float
    N0: float
    mu_I: float
    sigma2_I: float
    p_rx: float
    sinr: float
    rate_los: float

    @property
    def sigma_I(self) -> float:
        return math.sqrt(self.sigma2_I)


def spreading_gain(frequency: float) -> float:
    return SPEED_OF_LIGHT**2 / (16.0 * math.pi**2 * frequency**2)


def path_loss(f: float, K: float, r):
    """Spreading loss times inverse transmittance, ``(4 pi f r / c)^2 exp(K r)``."""
    if not f > 0:
        raise DomainError("frequency must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("distance must be positive")
    if K < 0:
        raise DomainError("absorption must be nonnegative")
    out = (4.0 * math.pi * f * r / SPEED_OF_LIGHT) ** 2 * np.exp(K * r)
    return float(out) if out.ndim == 0 else out


def received_power(params: ChannelParams) -> float:
    """Signal power from the serving station, ``p0 A0 r0^-2 exp(-K r0)``."""
    r0 = params.link_distance
    return params.p_tx * params.spreading_gain / r0**2 * math.exp(-params.absorption * r0)


def thermal_noise(params: ChannelParams) -> float:
    """Johnson-Nyquist term ``(W lambda^2 / 4 pi) k_B T0``."""
    lam = params.wavelength
    return params.bandwidth * lam**2 / (4.0 * math.pi) * BOLTZMANN * params.temperature


def base_noise(params: ChannelParams) -> float:
    """N0: thermal noise plus molecular-absorption noise from the serving link."""
    r0 = params.link_distance
    absorbed = params.p_tx * params.spreading_gain / r0**2 * -math.expm1(-params.absorption * r0)
    return thermal_noise(params) + absorbed


def noise_power(params: ChannelParams, interferer_distances: Sequence[float] = ()) -> float:
    """Total noise: N0 plus the absorption noise re-radiated from each interferer link."""
    d = np.asarray(interferer_distances, dtype=float)
    if np.any(d <= 0):
        raise DomainError("interferer distances must be positive")
    extra = params.p_interferer * params.spreading_gain * np.sum(-np.expm1(-params.absorption * d) / d**2)
    return base_noise(params) + float(extra)


def interference_moments(params: ChannelParams) -> tuple[float, float]:
    """Mean and variance of the aggregate interference under the Gaussian model.

    Absorption on interfering paths is neglected, which is accurate when
    ``K * Omega`` is small.
    """
    om, eps = params.interference_radius, params.hard_core
    if om <= eps:
        raise ConfigError("interference_radius must exceed hard_core (Omega > eps)")
    pa = params.p_interferer * params.spreading_gain
    load = math.pi * om**2 * params.sbs_density / 2.0
    mu = pa * (math.log(om) - math.log(eps)) / (om**2 - eps**2) * load
    var = pa**2 * load / (2.0 * eps**2 * om**2)
    return mu, var


def los_rate(params: ChannelParams, interference) -> tuple:
    """SINR and Shannon rate of the LoS link for a given interference power."""
    interference = np.asarray(interference, dtype=float)
    if np.any(interference < 0):
        raise DomainError("interference must be nonnegative")
    sinr = received_power(params) / (base_noise(params) + interference)
    rate = params.bandwidth * np.log2(1.0 + sinr)
    if sinr.ndim == 0:
        return float(sinr), float(rate)
    return sinr, rate


def total_rate(rate_los, p_los):
    """Average rate when only LoS links carry traffic."""
    p = np.asarray(p_los, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise DomainError("p_los must lie in [0, 1]")
    out = p * np.asarray(rate_los, dtype=float)
    return float(out) if out.ndim == 0 else out


def link_budget(params: ChannelParams) -> LinkBudget:
    """Deterministic link quantities, evaluating the rate at the mean interference."""
    params.validate()
    mu, var = interference_moments(params)
    sinr, rate = los_rate(params, mu)
    return LinkBudget(
        path_loss=path_loss(params.frequency, params.absorption, params.link_distance),
        N0=base_noise(params),
        mu_I=mu,
        sigma2_I=var,
        p_rx=received_power(params),
        sinr=sinr,
        rate_los=rate,
    )


# --------------------------------------------------------------------------
# random interference fields
# --------------------------------------------------------------------------

# Mean number of interferers implied by the moment formulas: a quarter of the
# base stations expected in the full disc, each uniform over the annulus.
ACTIVITY_FACTOR = 0.25


def interferer_count_mean(params: ChannelParams, activity: float = ACTIVITY_FACTOR) -> float:
    return activity * math.pi * params.interference_radius**2 * params.sbs_density


def sample_interference(
    params: ChannelParams,
    size: int,
    rng: np.random.Generator,
    activity: float = ACTIVITY_FACTOR,
    attenuate: bool = True,
) -> np.ndarray:
    """Aggregate interference of a Poisson field of active interferers.

    Interferer distances are i.i.d. with density ``2r / (Omega^2 - eps^2)`` on
    ``(eps, Omega)``. With ``activity = 1/4`` the first two moments match
    :func:`interference_moments` when ``attenuate`` is False.
    """
    om, eps = params.interference_radius, params.hard_core
    counts = rng.poisson(interferer_count_mean(params, activity), size)
    total = int(counts.sum())
    u = rng.random(total)
    r = np.sqrt(eps**2 + u * (om**2 - eps**2))
    power = params.p_interferer * params.spreading_gain / r**2
    if attenuate:
        power = power * np.exp(-params.absorption * r)
    owner = np.repeat(np.arange(size), counts)
    return np.bincount(owner, weights=power, minlength=size)


def interference_skewness(params: ChannelParams) -> float:
    """Skewness of the compound-Poisson field behind the moment formulas."""
    om, eps = params.interference_radius, params.hard_core
    m = interferer_count_mean(params)
    if m == 0:
        return 0.0
    span = om**2 - eps**2
    e4 = (eps**-2 - om**-2) / span  # E[r^-4]
    e6 = (eps**-4 - om**-4) / (2 * span)  # E[r^-6]
    return m * e6 / (m * e4) ** 1.5


def sample_truncated_gaussian(mu: float, sigma: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Normal(mu, sigma^2) conditioned on being nonnegative, by rejection."""
    if sigma == 0:
        return np.full(size, max(mu, 0.0))
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        draw = rng.normal(mu, sigma, int(need * 1.2) + 16)
        draw = draw[draw >= 0][:need]
        out[filled:filled + draw.size] = draw
        filled += draw.size
    return out
