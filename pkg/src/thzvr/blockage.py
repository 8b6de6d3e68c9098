"""Self-blockage, dynamic blockage and the probability of an available LoS link."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError

LOS = "LoS"
BLOCKED = "blocked"

_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class BlockageParams:
    """Blockage environment around a user.

    ``self_block_angle`` is the angular sector (radians) covered by the user's
    own body. Dynamic blockers of density ``blocker_density`` walk at
    ``blocker_speed``; each blockage event clears at rate ``departure_rate``.
    """

    self_block_angle: float = math.pi
    blocker_density: float = 0.125
    blocker_speed: float = 1.5
    departure_rate: float = 2.0
    h_blocker: float = 1.8
    h_receiver: float = 1.4
    h_sbs: float = 3.0
    interference_radius: float = 6.5
    sbs_density: float = 0.25

    def validate(self) -> "BlockageParams":
        if not 0.0 <= self.self_block_angle <= 2 * math.pi:
            raise ConfigError(f"self_block_angle must lie in [0, 2pi], got {self.self_block_angle!r}")
        if not self.h_sbs > self.h_receiver:
            raise ConfigError("h_sbs must exceed h_receiver")
        if not self.h_blocker > self.h_receiver:
            raise ConfigError("h_blocker must exceed h_receiver")
        if not self.departure_rate > 0:
            raise ConfigError("departure_rate must be positive")
        if not self.interference_radius > 0:
            raise ConfigError("interference_radius must be positive")
        for name in ("blocker_density", "blocker_speed", "sbs_density"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be nonnegative")
        return self

    def with_(self, **changes) -> "BlockageParams":
        return replace(self, **changes)


def delta_coeff(params: BlockageParams) -> float:
    """Blockage-rate coefficient: blocker arrivals per second per metre of link."""
    if params.h_sbs <= params.h_receiver:
        raise ConfigError("h_sbs must exceed h_receiver")
    height_ratio = (params.h_blocker - params.h_receiver) / (params.h_sbs - params.h_receiver)
    return 2.0 / math.pi * params.blocker_density * params.blocker_speed * height_ratio


def self_block_prob(omega: float) -> float:
    if not 0.0 <= omega <= 2 * math.pi:
        raise DomainError(f"self-blockage angle must lie in [0, 2pi], got {omega!r}")
    return omega / (2 * math.pi)


def not_self_blocked_prob(omega: float) -> float:
    return 1.0 - self_block_prob(omega)


def dynamic_block_prob(r, delta: float, nu: float):
    """Stationary blocked probability of one link of length ``r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("link length must be nonnegative")
    if math.isinf(nu):
        out = np.zeros_like(r)
    else:
        k = delta * r
        out = np.where(k > 0, k / (k + nu), 0.0)
    return float(out) if out.ndim == 0 else out


def all_blocked_prob(distances: Sequence[float], kappa: float, delta: float, nu: float) -> float:
    """Probability that every candidate link is self- or dynamically blocked."""
    d = np.asarray(distances, dtype=float)
    if d.size == 0:
        raise DomainError("no candidate links; handle an empty disc as blocked")
    if np.any(d < 0):
        raise DomainError("distances must be nonnegative")
    if not 0.0 <= kappa <= 1.0:
        raise DomainError("kappa must lie in [0, 1]")
    return float(np.prod(1.0 - kappa / (1.0 + (delta / nu) * d)))


def aleph(delta: float, nu: float, omega_radius: float) -> float:
    """Disc-averaged log-blockage factor, in ``(-1, 0]``.

    Equals the mean of ``-1 / (1 + (delta/nu) r)`` over ``r`` with density
    ``2r / Omega^2``; a series is used when ``delta * Omega / nu`` is tiny.
    """
    if not nu > 0 or not omega_radius > 0 or delta < 0:
        raise DomainError("aleph requires nu > 0, Omega > 0, delta >= 0")
    y = delta * omega_radius / nu
    if y < _SERIES_CUTOFF:
        return -1.0 + 2.0 * y / 3.0 - y * y / 2.0
    return 2.0 * math.log1p(y) / (y * y) - 2.0 / y


def p_los_exponent(params: BlockageParams) -> float:
    """Exponent of the LoS-probability closed form; nonpositive for valid inputs."""
    d = delta_coeff(params)
    a = aleph(d, params.departure_rate, params.interference_radius)
    kappa = not_self_blocked_prob(params.self_block_angle)
    return kappa * a * params.sbs_density * math.pi * params.interference_radius**2


def p_los(params: BlockageParams) -> float:
    """Probability that at least one base station in the disc offers LoS."""
    return min(1.0, max(0.0, -math.expm1(p_los_exponent(params))))


# --------------------------------------------------------------------------
# blockage timeline of a single link
# --------------------------------------------------------------------------

def simulate_blockage_timeline(
    link_distance: float,
    delta: float,
    nu: float,
    omega_user: float,
    duration: float,
    seed,
    self_blocked: bool | None = None,
    stationary_start: bool = True,
) -> list[tuple[str, float]]:
    """Alternating (state, dwell) segments of one link over ``duration`` seconds.

    Blockers arrive as a Poisson stream of rate ``delta * r`` and each stays
    an exponential time of rate ``nu`` (an M/M/infinity occupancy). The link
    is blocked while the occupancy is positive, or throughout when the user's
    body covers it. Self-blockage is a Bernoulli draw with probability
    ``omega_user / 2 pi`` unless ``self_blocked`` is given.
    """
    if not duration > 0:
        raise DomainError("duration must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.Generator(np.random.Philox(seed))
    p_self = self_block_prob(omega_user)
    if self_blocked is None:
        self_blocked = bool(rng.random() < p_self)
    if self_blocked:
        return [(BLOCKED, float(duration))]
    lam = delta * link_distance
    if lam <= 0:
        return [(LOS, float(duration))]
    n = int(rng.poisson(lam / nu)) if stationary_start else 0
    segments: list[tuple[str, float]] = []
    t = 0.0
    state = BLOCKED if n > 0 else LOS
    seg_start = 0.0
    while True:
        rate = lam + nu * n
        t += rng.exponential(1.0 / rate)
        if t >= duration:
            break
        if rng.random() * rate < lam:
            n += 1
        else:
            n -= 1
        new_state = BLOCKED if n > 0 else LOS
        if new_state != state:
            segments.append((state, t - seg_start))
            seg_start = t
            state = new_state
    segments.append((state, duration - seg_start))
    return segments


def blocked_fraction(segments: Sequence[tuple[str, float]]) -> float:
    total = sum(d for _, d in segments)
    return sum(d for s, d in segments if s == BLOCKED) / total
