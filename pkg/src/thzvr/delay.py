"""Moments of the transmission delay and of the end-to-end delay.

A request waits in an M/M/1 queue at the edge (Q1), then in an M/G/1 queue
at the base station (Q2) whose service time is the transmission delay
``alpha = L / (P * C)``. ``P`` is the LoS probability averaged over a uniform
body orientation, which enters only through the parameter ``Z``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import LinkBudget
from .errors import ConfigError, InstabilityError, ModelDomainError

log = logging.getLogger(__name__)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)
_GL_U = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


@dataclass(frozen=True)
class QueueParams:
    """Tandem-queue parameters.

    Attributes
    ----------
    arrival_rate : float
        Request rate at the edge queue, 1/s.
    service_rate : float
        Exponential service rate of the edge queue, 1/s.
    content_bits : float
        Size of one VR content item in bits.
    q2_arrival_rate : float or None
        Arrival rate at the base-station queue. ``None`` means the output
        rate of the edge queue, which equals ``arrival_rate`` for a stable
        M/M/1 queue.
    beam_tracking_delay : float
        Constant added to every end-to-end delay, seconds.
    """

    arrival_rate: float = 0.1
    service_rate: float = 700.0
    content_bits: float = 10e6
    q2_arrival_rate: float | None = None
    beam_tracking_delay: float = 0.0

    def validate(self) -> "QueueParams":
        if not self.arrival_rate > 0:
            raise ConfigError("arrival_rate must be positive")
        if not self.content_bits > 0:
            raise ConfigError("content_bits must be positive")
        if not self.service_rate > self.arrival_rate:
            raise ConfigError(
                f"edge queue unstable: service_rate mu1={self.service_rate} must exceed "
                f"arrival_rate lambda1={self.arrival_rate} (mu1 > lambda1)"
            )
        if self.q2_arrival_rate is not None and not self.q2_arrival_rate > 0:
            raise ConfigError("q2_arrival_rate must be positive")
        if self.beam_tracking_delay < 0:
            raise ConfigError("beam_tracking_delay must be nonnegative")
        return self

    @property
    def lambda2(self) -> float:
        return self.arrival_rate if self.q2_arrival_rate is None else self.q2_arrival_rate

    @property
    def q1_gap(self) -> float:
        """mu1 - lambda1, the rate of the exponential edge sojourn time."""
        if self.service_rate <= self.arrival_rate:
            raise InstabilityError("edge queue unstable (mu1 <= lambda1)",
                                   rho=self.arrival_rate / self.service_rate)
        return self.service_rate - self.arrival_rate

    def with_(self, **changes) -> "QueueParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DelayMoments:
    e_alpha: float
    e_alpha2: float
    e_alpha3: float
    c2_alpha: float
    e_t1: float
    e_t2: float
    mean_e2e: float
    second_moment_e2e: float
    var_e2e: float
    rho2: float = 0.0
    jensen_gap: float = 0.0

    @property
    def std_e2e(self) -> float:
        return math.sqrt(self.var_e2e)


# --------------------------------------------------------------------------
# orientation-averaged LoS moments
# --------------------------------------------------------------------------

def z_param(aleph_value: float, eta_p: float, omega_radius: float) -> float:
    return aleph_value * eta_p * omega_radius**2


def _check_z(Z: float) -> float:
    if not Z < 0:
        raise ModelDomainError(f"Z must be negative, got {Z!r}", expression="Z < 0")
    return math.pi * Z


def _quadrature_moment(x: float, k: int) -> float:
    # average of (1 - exp(u x))^k over u in [0, 1]; the integrand is entire
    return float(np.sum(_GL_W * (-np.expm1(_GL_U * x)) ** k))


def mean_plos_over_orientation(Z: float) -> float:
    """Mean LoS probability when the self-blocked fraction is uniform on [0, 1]."""
    x = _check_z(Z)
    if x > -1.0:
        return _quadrature_moment(x, 1)
    return 1.0 - math.expm1(x) / x


def second_moment_plos(Z: float) -> float:
    x = _check_z(Z)
    if x > -1.0:
        return _quadrature_moment(x, 2)
    ex = math.exp(x)
    return 1.0 + (ex * ex - 4.0 * ex + 3.0) / (2.0 * x)


def third_moment_plos(Z: float) -> float:
    x = _check_z(Z)
    if x > -1.0:
        return _quadrature_moment(x, 3)
    ex = math.exp(x)
    return -(2.0 * ex**3 - 9.0 * ex**2 + 18.0 * ex - 6.0 * x - 11.0) / (6.0 * x)


def va(Z: float) -> float:
    """Squared coefficient of variation of the orientation-averaged LoS probability."""
    m1 = mean_plos_over_orientation(Z)
    if m1 <= 0:
        raise ModelDomainError("mean LoS probability is zero", expression="E[P] > 0")
    m2 = second_moment_plos(Z)
    v = (m2 - m1 * m1) / (m1 * m1)
    if v < 0:
        # only reachable through rounding; clamp and say so
        log.warning("negative LoS variance ratio %.3g at Z=%g clamped to 0", v, Z)
        v = 0.0
    return v


# --------------------------------------------------------------------------
# transmission delay
# --------------------------------------------------------------------------

def tx_delay_moments(link: LinkBudget, queue: QueueParams, Z: float | None,
                     c2_form: str = "variance_ratio") -> tuple[float, float, float, float]:
    """First three moments and squared CV of the transmission delay.

    ``Z=None`` means guaranteed LoS (``P = 1``). The k-th moment is
    ``L^k / (E[P^k] rate^k)`` with ``rate`` evaluated at the mean
    interference. ``c2_form="variance_ratio"`` uses the variance ratio of
    ``P`` as the squared CV (first-order delta method); ``"per_rate_squared"``
    divides it by ``rate^2`` instead.
    """
    rate = link.rate_los
    if not rate > 0:
        raise ModelDomainError("LoS rate must be positive", expression="rate_los > 0")
    L = queue.content_bits
    if Z is None:
        m1 = m2 = m3 = 1.0
        v = 0.0
    else:
        m1, m2, m3 = mean_plos_over_orientation(Z), second_moment_plos(Z), third_moment_plos(Z)
        for name, m in (("E[P]", m1), ("E[P^2]", m2), ("E[P^3]", m3)):
            if not m > 0:
                raise ModelDomainError(f"{name} is not positive ({m:g})", expression=f"{name} > 0")
        v = va(Z)
    e1 = L / (m1 * rate)
    e2 = L**2 / (m2 * rate**2)
    e3 = L**3 / (m3 * rate**3)
    if c2_form == "variance_ratio":
        c2 = v
    elif c2_form == "per_rate_squared":
        c2 = v / rate**2
    else:
        raise ConfigError(f"unknown c2_form {c2_form!r}")
    return e1, e2, e3, c2


# --------------------------------------------------------------------------
# end-to-end delay
# --------------------------------------------------------------------------

def rho2(e_alpha: float, queue: QueueParams) -> float:
    r = queue.lambda2 * e_alpha
    if not r < 1:
        raise InstabilityError(f"base-station queue unstable: rho2 = {r:.6g} >= 1", rho=r)
    return r


def mean_q2_sojourn(e_alpha: float, c2_alpha: float, queue: QueueParams) -> float:
    """Pollaczek-Khinchine mean time in the base-station queue."""
    r = rho2(e_alpha, queue)
    return (r / (2.0 * (1.0 - r)) * (c2_alpha + 1.0) + 1.0) * e_alpha


def mean_e2e(moments, queue: QueueParams) -> float:
    """Mean end-to-end delay from ``(e_alpha, e_alpha2, e_alpha3, c2_alpha)``."""
    e1, _, _, c2 = _unpack(moments)
    return 1.0 / queue.q1_gap + mean_q2_sojourn(e1, c2, queue) + queue.beam_tracking_delay


def q2_second_moment(e1: float, e2: float, e3: float, queue: QueueParams) -> float:
    """Second moment of the M/G/1 sojourn time (Takacs recursion)."""
    lam = queue.lambda2
    r = rho2(e1, queue)
    w1 = lam * e2 / (2.0 * (1.0 - r))
    w2 = 2.0 * w1 * w1 + lam * e3 / (3.0 * (1.0 - r))
    return w2 + 2.0 * w1 * e1 + e2


def q2_second_moment_compact(e1: float, e2: float, e3: float, queue: QueueParams) -> float:
    """Alternative closed form written with utilisation in place of arrival rate.

    Kept for comparison; it does not reduce to the M/M/1 result.
    """
    r = rho2(e1, queue)
    a = r / (2.0 * (1.0 - r))
    return e2 + r * e3 / (3.0 * (1.0 - r)) + r * e2 / (2.0 * (1.0 - r)) + (a * e2 / e1) ** 2


def second_moment_e2e(moments, queue: QueueParams, form: str = "takacs") -> float:
    """E[(T1 + T2 + b)^2] with T1 ~ Exp(mu1 - lambda1) independent of T2."""
    e1, e2, e3, c2 = _unpack(moments)
    g = queue.q1_gap
    t2 = mean_q2_sojourn(e1, c2, queue)
    if form == "takacs":
        t2sq = q2_second_moment(e1, e2, e3, queue)
    elif form == "compact":
        t2sq = q2_second_moment_compact(e1, e2, e3, queue)
    else:
        raise ConfigError(f"unknown second-moment form {form!r}")
    b = queue.beam_tracking_delay
    mean = 1.0 / g + t2
    second = 2.0 / g**2 + 2.0 * t2 / g + t2sq
    return second + 2.0 * b * mean + b * b


def _unpack(moments):
    if isinstance(moments, DelayMoments):
        return moments.e_alpha, moments.e_alpha2, moments.e_alpha3, moments.c2_alpha
    return moments


def consistent_moments(e1: float, c2: float) -> tuple[float, float]:
    """Second and third moments implied by mean ``e1`` and squared CV ``c2``.

    Uses a log-normal closure, ``E[a^k] = e1^k (1 + c2)^(k(k-1)/2)``.
    """
    return e1 * e1 * (1.0 + c2), e1**3 * (1.0 + c2) ** 3


def delay_moments(link: LinkBudget, queue: QueueParams, Z: float | None,
                  c2_form: str = "variance_ratio", second_form: str = "takacs",
                  moment_policy: str = "substitute") -> DelayMoments:
    """All delay moments for one operating point.

    The closed-form higher moments of the transmission delay divide by
    ``E[P^k]``, which makes ``E[a^2] < E[a]^2`` whenever ``P`` is random.
    With ``moment_policy="substitute"`` such inconsistent pairs are replaced
    by :func:`consistent_moments`; ``"closed_form"`` keeps them and fails
    only if the end-to-end variance comes out negative.
    """
    queue.validate()
    tx = tx_delay_moments(link, queue, Z, c2_form=c2_form)
    e1, e2, e3, c2 = tx
    gap = e2 - e1 * e1
    if gap < -1e-12 * e1 * e1:
        if moment_policy == "substitute":
            s2, s3 = consistent_moments(e1, c2)
            log.info("transmission-delay moments violate Jensen: closed form (%.6g, %.6g), "
                     "substituted (%.6g, %.6g)", e2, e3, s2, s3)
            e2, e3 = s2, s3
            tx = (e1, e2, e3, c2)
        elif moment_policy != "closed_form":
            raise ConfigError(f"unknown moment_policy {moment_policy!r}")
    t1 = 1.0 / queue.q1_gap
    t2 = mean_q2_sojourn(e1, c2, queue)
    mean = mean_e2e(tx, queue)
    second = second_moment_e2e(tx, queue, form=second_form)
    var = second - mean * mean
    if var < 0:
        raise ModelDomainError(f"end-to-end variance is negative ({var:.3g})",
                               expression="E[T^2] - E[T]^2 >= 0")
    return DelayMoments(e1, e2, e3, c2, t1, t2, mean, second, var,
                        rho2=rho2(e1, queue), jensen_gap=gap)
