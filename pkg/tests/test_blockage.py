import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as spi

from thzvr.blockage import (
    BLOCKED,
    LOS,
    BlockageParams,
    aleph,
    all_blocked_prob,
    blocked_fraction,
    delta_coeff,
    dynamic_block_prob,
    not_self_blocked_prob,
    p_los,
    p_los_exponent,
    self_block_prob,
    simulate_blockage_timeline,
)
from thzvr.errors import ConfigError, DomainError
from thzvr.geometry import Region, distances_from, sample_mhcpp

DEFAULT = BlockageParams()


def test_delta_coeff():
    assert delta_coeff(DEFAULT.with_(blocker_density=0.0)) == 0.0
    assert delta_coeff(DEFAULT) == pytest.approx(2 / math.pi * 0.1875 * 0.25, rel=1e-12)
    assert delta_coeff(DEFAULT) == pytest.approx(0.02984, abs=1e-5)
    assert delta_coeff(DEFAULT.with_(blocker_density=0.25)) == pytest.approx(2 * delta_coeff(DEFAULT))
    with pytest.raises(ConfigError):
        delta_coeff(DEFAULT.with_(h_sbs=1.0))


def test_self_block():
    assert self_block_prob(0.0) == 0.0
    assert self_block_prob(2 * math.pi) == 1.0
    assert self_block_prob(math.pi / 3) == pytest.approx(1 / 6)
    with pytest.raises(DomainError):
        self_block_prob(7.0)


def test_dynamic_block():
    assert dynamic_block_prob(0.0, 0.03, 2.0) == 0.0
    assert dynamic_block_prob(3.0, 0.03, math.inf) == 0.0
    assert dynamic_block_prob(2.0, 1.0, 2.0) == pytest.approx(0.5)


def test_all_blocked():
    assert all_blocked_prob([1.0, 2.0], 1.0, 0.0, 2.0) == 0.0
    assert all_blocked_prob([1.0, 2.0], 0.0, 0.3, 2.0) == 1.0
    assert all_blocked_prob([2.0], 0.75, 1.0, 2.0) == pytest.approx(0.625)
    with pytest.raises(DomainError):
        all_blocked_prob([], 0.5, 0.1, 2.0)


def test_aleph_values():
    assert aleph(0.0, 2.0, 5.0) == -1.0
    assert aleph(2.0, 2.0, 1.0) == pytest.approx(2 * math.log(2) - 2, abs=1e-12)
    assert aleph(2.0, 2.0, 1.0) == pytest.approx(-0.613706, abs=1e-6)


def test_aleph_series_is_continuous():
    nu, om = 2.0, 5.0
    d = 1e-4 * nu / om
    below = aleph(d * (1 - 1e-9), nu, om)
    above = aleph(d * (1 + 1e-9), nu, om)
    assert below == pytest.approx(above, abs=1e-9)


def test_aleph_matches_disc_average():
    # the closed form equals the disc average of -1/(1 + (delta/nu) r)
    for d, nu, om in [(0.03, 2.0, 6.5), (0.5, 1.0, 3.0), (2.0, 0.5, 10.0)]:
        ref, _ = spi.quad(lambda r: -2 * r / om**2 / (1 + d / nu * r), 0, om)
        assert aleph(d, nu, om) == pytest.approx(ref, rel=1e-10)


def test_aleph_scan_monotone_in_range():
    ds = np.logspace(-8, 3, 400)
    vals = np.array([aleph(d, 2.0, 5.0) for d in ds])
    assert np.all((vals > -1) & (vals < 0))
    assert np.all(np.diff(vals) > 0)


def test_p_los_limits():
    assert p_los(DEFAULT.with_(sbs_density=0.0)) == 0.0
    p = DEFAULT.with_(blocker_density=0.0, self_block_angle=0.0, interference_radius=5.0)
    assert p_los(p) == pytest.approx(1 - math.exp(-0.25 * math.pi * 25), rel=1e-12)
    assert p_los_exponent(DEFAULT) <= 0


def marginal_all_blocked_mc(params: BlockageParams, trials: int, seed: int) -> float:
    """Brute-force: Poisson count in the disc, radii with density 2r/Omega^2."""
    rng = np.random.Generator(np.random.Philox(seed))
    om = params.interference_radius
    kappa = not_self_blocked_prob(params.self_block_angle)
    d, nu = delta_coeff(params), params.departure_rate
    counts = rng.poisson(params.sbs_density * math.pi * om**2, trials)
    total = 0.0
    for q in counts:
        if q == 0:
            total += 1.0
            continue
        r = om * np.sqrt(rng.random(q))
        total += all_blocked_prob(r, kappa, d, nu)
    return total / trials


def test_p_los_brute_force():
    params = DEFAULT.with_(interference_radius=5.0, self_block_angle=1.85 * math.pi)
    mc = 1.0 - marginal_all_blocked_mc(params, 100_000, 1)
    assert abs(mc - p_los(params)) < 0.01


def test_equivalent_ppp_against_hard_core_deployments():
    # true hard-core deployments around a user at the room centre
    params = DEFAULT.with_(self_block_angle=1.85 * math.pi)
    om = params.interference_radius
    kappa = not_self_blocked_prob(params.self_block_angle)
    d, nu = delta_coeff(params), params.departure_rate
    room = Region(20.0)
    acc = []
    for s in range(4000):
        dep = sample_mhcpp(params.sbs_density, 1.0, room, s)
        r = distances_from((10.0, 10.0), dep.positions)
        r = r[r <= om]
        acc.append(1.0 if r.size == 0 else all_blocked_prob(r, kappa, d, nu))
    assert abs((1 - np.mean(acc)) - p_los(params)) < 0.02


grid_values = st.tuples(
    st.floats(0.0, 1.0),          # blocker density
    st.floats(0.0, 2 * math.pi),  # self-blockage angle
    st.floats(0.5, 15.0),         # disc radius
    st.floats(0.0, 1.0),          # sbs density
)


@given(grid_values)
@settings(max_examples=200)
def test_p_los_in_unit_interval(v):
    ib, w, om, eta = v
    p = p_los(DEFAULT.with_(blocker_density=ib, self_block_angle=w, interference_radius=om, sbs_density=eta))
    assert 0.0 <= p <= 1.0


def test_p_los_monotone():
    base = DEFAULT.with_(self_block_angle=1.9 * math.pi, sbs_density=0.05)
    by_ib = [p_los(base.with_(blocker_density=x)) for x in np.linspace(0, 2, 20)]
    by_w = [p_los(base.with_(self_block_angle=x)) for x in np.linspace(0, 2 * math.pi, 20)]
    by_speed = [p_los(base.with_(blocker_speed=x)) for x in np.linspace(0, 20, 20)]
    for seq in (by_ib, by_w, by_speed):
        assert np.all(np.diff(seq) <= 1e-15)


def test_timeline_without_blockers():
    seg = simulate_blockage_timeline(3.0, 0.0, 2.0, 0.0, 10.0, 1)
    assert seg == [(LOS, 10.0)]


def test_timeline_self_blocked():
    seg = simulate_blockage_timeline(3.0, 0.1, 2.0, 2 * math.pi, 10.0, 1)
    assert seg == [(BLOCKED, 10.0)]


def test_timeline_deterministic_and_alternating():
    a = simulate_blockage_timeline(3.0, 0.5, 2.0, 0.0, 100.0, 9)
    b = simulate_blockage_timeline(3.0, 0.5, 2.0, 0.0, 100.0, 9)
    assert a == b
    assert sum(d for _, d in a) == pytest.approx(100.0)
    assert all(s1 != s2 for (s1, _), (s2, _) in zip(a, a[1:]))


@pytest.mark.parametrize("r", [2.0, 6.0])
def test_timeline_long_run_fraction(r):
    d, nu = 0.03, 2.0  # delta r / nu <= 0.1
    seg = simulate_blockage_timeline(r, d, nu, 0.0, 200_000.0, 5)
    frac = blocked_fraction(seg)
    x = d * r / nu
    assert frac == pytest.approx(-math.expm1(-x), rel=0.03)
    assert abs(frac - dynamic_block_prob(r, d, nu)) < 0.02
