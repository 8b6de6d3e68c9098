"""Monte Carlo simulator of the two-queue VR delivery system over a blockable THz link.

Each session draws Poisson request arrivals, serves them through the edge
queue (exponential service) and then through the base-station queue, whose
service is the time needed to push ``L`` bits at the LoS rate. Transmission
pauses whenever no base station is in line of sight.

Line of sight is modelled per *epoch*: every ``mobility_period`` seconds the
user's surroundings are redrawn (stations in the interference disc, body
orientation, blockers on each link). Inside an epoch each link's blocker
count evolves as an M/M/infinity process, and the user has LoS while at
least one station is neither body-blocked nor occupied by a blocker.

Random streams are Philox generators keyed by ``SeedSequence(seed,
spawn_key=(stream,))`` with one stream per subsystem, so changing how one
subsystem consumes randomness leaves the others untouched.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .blockage import delta_coeff, p_los
from .channel import los_rate, link_budget, sample_interference, sample_truncated_gaussian
from .config import NetworkConfig
from .errors import DomainError, ModelDomainError
from .evt import empirical_tvar

__all__ = [
    "STREAMS",
    "SessionTrace",
    "ReplicationSummary",
    "SimulationResult",
    "LosEnvironment",
    "run_session",
    "run_replications",
    "summarize",
    "los_availability",
    "empirical_tvar",
]

STREAMS = {"arrivals": 0, "service": 1, "blockage": 2, "interference": 3}
DEFAULT_DELTAS = (0.005, 0.010, 0.020, 0.050, 0.100)
_MAX_EPOCHS_PER_SERVICE = 1_000_000


def stream(seed: int, name: str) -> np.random.Generator:
    if seed < 0:
        raise DomainError("seeds must be nonnegative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(STREAMS[name],))
    return np.random.Generator(np.random.Philox(ss))


# --------------------------------------------------------------------------
# line-of-sight environment
# --------------------------------------------------------------------------

class LosEnvironment:
    """LoS availability of one user, generated lazily one epoch at a time.

    Epoch ``k`` covers ``[phase + k*period, phase + (k+1)*period)``. Epochs
    are generated on first access from a sequential stream, so the result
    is deterministic as long as callers visit epochs in a deterministic
    order (the simulator visits them in increasing time).
    """

    def __init__(self, config: NetworkConfig, rng: np.random.Generator):
        self.rng = rng
        self.period = config.mobility_period
        bp = config.blockage_params()
        self.delta = delta_coeff(bp)
        self.nu = bp.departure_rate
        self.radius = bp.interference_radius
        self.station_mean = bp.sbs_density * math.pi * bp.interference_radius**2
        self.uniform_orientation = config.orientation == "uniform"
        self.omega = bp.self_block_angle
        self.phase = float(rng.uniform(0.0, self.period))
        self._cache: dict[int, np.ndarray] = {}

    # -- one epoch -------------------------------------------------------

    def _link_clear_intervals(self, n0: int, first: float, lam: float) -> list[tuple[float, float]]:
        # Gillespie run of one link's blocker count on [0, period)
        tau, nu, rng = self.period, self.nu, self.rng
        out = []
        n, t = n0, first
        clear_since = 0.0 if n == 0 else None
        while t < tau:
            rate = lam + nu * n
            if rng.random() * rate < lam:
                if n == 0:
                    out.append((clear_since, t))
                n += 1
            else:
                n -= 1
                if n == 0:
                    clear_since = t
            rate = lam + nu * n
            t += rng.exponential(1.0 / rate) if rate > 0 else math.inf
        if n == 0:
            out.append((clear_since, tau))
        return out

    def _generate(self) -> np.ndarray:
        """LoS intervals of a fresh epoch, relative to its start."""
        rng, tau = self.rng, self.period
        q = int(rng.poisson(self.station_mean))
        r = self.radius * np.sqrt(rng.random(q))
        omega = 2 * math.pi * rng.random() if self.uniform_orientation else self.omega
        body = rng.random(q) < omega / (2 * math.pi)
        lam = self.delta * r
        n0 = rng.poisson(lam / self.nu)
        rate = lam + self.nu * n0
        with np.errstate(divide="ignore"):
            first = rng.exponential(1.0, q) / rate
        first[rate == 0] = math.inf
        free = ~body
        if np.any(free & (n0 == 0) & (first >= tau)):
            return np.array([[0.0, tau]])
        intervals = []
        for i in np.flatnonzero(free):
            intervals.extend(self._link_clear_intervals(int(n0[i]), float(first[i]), float(lam[i])))
        return _union(intervals)

    def epoch(self, k: int) -> np.ndarray:
        """Absolute LoS intervals of epoch ``k`` as an ``(m, 2)`` array."""
        iv = self._cache.get(k)
        if iv is None:
            iv = self._generate() + (self.phase + k * self.period)
            self._cache[k] = iv
        return iv

    def epoch_index(self, t: float) -> int:
        return math.floor((t - self.phase) / self.period)

    def epoch_los_fraction(self, t: float) -> float:
        iv = self.epoch(self.epoch_index(t))
        return min(1.0, float(np.sum(iv[:, 1] - iv[:, 0]) / self.period)) if iv.size else 0.0

    def is_los(self, t: float) -> bool:
        iv = self.epoch(self.epoch_index(t))
        return bool(np.any((iv[:, 0] <= t) & (t < iv[:, 1])))

    def deliver(self, start: float, work: float) -> float:
        """Time at which ``work`` seconds of LoS transmission, begun at ``start``, complete."""
        t, remaining = start, work
        k = self.epoch_index(t)
        for _ in range(_MAX_EPOCHS_PER_SERVICE):
            for a, b in self.epoch(k):
                if b <= t:
                    continue
                s = max(a, t)
                if s + remaining <= b:
                    return s + remaining
                remaining -= b - s
                t = b
            k += 1
            t = max(t, self.phase + k * self.period)
        raise ModelDomainError("no line of sight within a million mobility periods",
                               expression="p_los > 0")


def _union(intervals: list[tuple[float, float]]) -> np.ndarray:
    if not intervals:
        return np.zeros((0, 2))
    iv = sorted(intervals)
    merged = [list(iv[0])]
    for a, b in iv[1:]:
        if a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return np.array(merged, dtype=float)


def los_availability(config: NetworkConfig, duration: float, seed: int) -> float:
    """Fraction of ``duration`` seconds during which some station is in LoS."""
    env = LosEnvironment(config, stream(seed, "blockage"))
    k_end = env.epoch_index(duration)
    total = 0.0
    for k in range(env.epoch_index(0.0), k_end + 1):
        iv = np.clip(env.epoch(k), 0.0, duration)
        total += float(np.sum(iv[:, 1] - iv[:, 0]))
    return total / duration


# --------------------------------------------------------------------------
# one session
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SessionTrace:
    """Per-request timings of one session (all in seconds).

    ``e2e = t1_wait + t1_service + q2_wait + tx_time + beam_tracking_delay``.
    ``los_fraction`` is the share of each transmission spent in LoS, and
    ``epoch_los`` the time-average LoS availability of the mobility epoch
    in which each transmission started.
    """

    request_times: np.ndarray
    t1_wait: np.ndarray
    t1_service: np.ndarray
    q2_wait: np.ndarray
    tx_time: np.ndarray
    e2e: np.ndarray
    los_fraction: np.ndarray
    epoch_los: np.ndarray
    beam_tracking_delay: float = 0.0

    def __len__(self) -> int:
        return self.request_times.size

    @property
    def session_max_e2e(self) -> float:
        return float(self.e2e.max()) if self.e2e.size else math.nan

    @property
    def q2_arrival(self) -> np.ndarray:
        return self.request_times + self.t1_wait + self.t1_service

    @property
    def q2_start(self) -> np.ndarray:
        return self.q2_arrival + self.q2_wait


def _interference(config: NetworkConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    ch = config.channel_params()
    if config.interference_mode == "geometric":
        return sample_interference(ch, n, rng)
    link = link_budget(ch)
    if config.interference_mode == "per_session":
        return np.full(n, sample_truncated_gaussian(link.mu_I, link.sigma_I, 1, rng)[0])
    return sample_truncated_gaussian(link.mu_I, link.sigma_I, n, rng)


def run_session(config: NetworkConfig, seed: int, validate: bool = True) -> SessionTrace:
    """Simulate one VR session of ``config.session_length`` seconds."""
    if validate:
        config.validate()
    if config.enabled:
        bp = config.blockage_params()
        best = bp if config.orientation == "fixed" else bp.with_(self_block_angle=0.0)
        if p_los(best) <= 0:
            raise ModelDomainError("line of sight is never available", expression="p_los > 0")
    T = config.session_length
    lam1, mu1 = config.arrival_rate, config.service_rate

    rng_a = stream(seed, "arrivals")
    n = int(rng_a.poisson(lam1 * T))
    arrivals = np.sort(rng_a.uniform(0.0, T, n))
    s1 = stream(seed, "service").exponential(1.0 / mu1, n)

    interference = _interference(config, n, stream(seed, "interference"))
    _, rate = los_rate(config.channel_params(), interference)
    work = config.content_bits / np.asarray(rate, dtype=float).reshape(n)

    env = LosEnvironment(config, stream(seed, "blockage")) if config.enabled else None

    t1_wait = np.empty(n)
    q2_wait = np.empty(n)
    tx = np.empty(n)
    epoch_los = np.ones(n)
    d1 = 0.0
    f2 = 0.0
    for i in range(n):
        a = arrivals[i]
        start1 = max(a, d1)
        t1_wait[i] = start1 - a
        d1 = start1 + s1[i]
        start2 = max(d1, f2)
        q2_wait[i] = start2 - d1
        if env is None:
            f2 = start2 + work[i]
        else:
            epoch_los[i] = env.epoch_los_fraction(start2)
            f2 = env.deliver(start2, work[i])
        tx[i] = f2 - start2
    beam = config.beam_tracking_delay
    e2e = t1_wait + s1 + q2_wait + tx + beam
    with np.errstate(invalid="ignore", divide="ignore"):
        los_fraction = np.where(tx > 0, work / tx, 1.0)
    return SessionTrace(arrivals, t1_wait, s1, q2_wait, tx, e2e, np.minimum(los_fraction, 1.0),
                        epoch_los, beam)


# --------------------------------------------------------------------------
# replications
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ReplicationSummary:
    seed: int
    n_requests: int
    mean_e2e: float
    var_e2e: float
    empirical_reliability: tuple[float, ...]
    block_max: float
    empirical_plos: float
    samples: np.ndarray = field(repr=False)
    t1_sojourn: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))


def summarize(trace: SessionTrace, seed: int, deltas=DEFAULT_DELTAS) -> ReplicationSummary:
    e = trace.e2e
    n = e.size
    rel = tuple(float(np.mean(e <= d)) if n else math.nan for d in deltas)
    return ReplicationSummary(
        seed=seed,
        n_requests=n,
        mean_e2e=float(e.mean()) if n else math.nan,
        var_e2e=float(e.var(ddof=1)) if n > 1 else math.nan,
        empirical_reliability=rel,
        block_max=trace.session_max_e2e,
        empirical_plos=float(trace.epoch_los.mean()) if n else math.nan,
        samples=e,
        t1_sojourn=trace.t1_wait + trace.t1_service,
    )


@dataclass(frozen=True)
class SimulationResult:
    """Aggregate over replications, in replication order."""

    config: NetworkConfig
    base_seed: int
    deltas: tuple[float, ...]
    summaries: tuple[ReplicationSummary, ...]

    @property
    def runs(self) -> int:
        return len(self.summaries)

    @property
    def pooled_e2e(self) -> np.ndarray:
        return np.concatenate([s.samples for s in self.summaries]) if self.summaries else np.zeros(0)

    @property
    def n_requests(self) -> int:
        return sum(s.n_requests for s in self.summaries)

    @property
    def mean_e2e(self) -> float:
        return float(self.pooled_e2e.mean())

    @property
    def var_e2e(self) -> float:
        return float(self.pooled_e2e.var(ddof=1))

    @property
    def second_moment_e2e(self) -> float:
        return float(np.mean(self.pooled_e2e**2))

    @property
    def mean_e2e_stderr(self) -> float:
        return math.sqrt(self.var_e2e / self.n_requests)

    def reliability(self, delta: float) -> tuple[float, float]:
        """Pooled fraction of requests with delay at most ``delta`` and its binomial standard error."""
        e = self.pooled_e2e
        p = float(np.mean(e <= delta))
        return p, math.sqrt(p * (1 - p) / e.size)

    @property
    def block_maxima(self) -> np.ndarray:
        m = np.array([s.block_max for s in self.summaries])
        return m[np.isfinite(m)]

    def tail_reliability(self, delta: float) -> tuple[float, float]:
        """Fraction of sessions whose worst request meets ``delta``, with binomial standard error."""
        m = self.block_maxima
        p = float(np.mean(m <= delta))
        return p, math.sqrt(p * (1 - p) / m.size)

    def empirical_tvar(self, alpha_c: float, min_tail: float = 10.0) -> float:
        return empirical_tvar(self.block_maxima, alpha_c, min_tail)

    @property
    def empirical_plos(self) -> tuple[float, float]:
        v = np.array([s.empirical_plos for s in self.summaries])
        v = v[np.isfinite(v)]
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
        return float(v.mean()), se

    @property
    def t1_sojourn(self) -> tuple[float, float]:
        """Mean edge-queue sojourn (wait plus service) over all requests, with its standard error."""
        x = np.concatenate([s.t1_sojourn for s in self.summaries])
        return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _one(args) -> ReplicationSummary:
    config, seed, deltas = args
    return summarize(run_session(config, seed, validate=False), seed, deltas)


def run_replications(config: NetworkConfig, runs: int, base_seed: int, deltas=DEFAULT_DELTAS,
                     workers: int = 1) -> SimulationResult:
    """``runs`` independent sessions with seeds ``base_seed + i``."""
    if runs < 1:
        raise DomainError("runs must be at least 1")
    config.validate()
    deltas = tuple(float(d) for d in deltas)
    jobs = [(config, base_seed + i, deltas) for i in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_one, jobs, chunksize=max(1, runs // (8 * workers))))
    else:
        summaries = [_one(j) for j in jobs]
    return SimulationResult(config, base_seed, deltas, tuple(summaries))
