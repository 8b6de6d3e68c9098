import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as spi
from scipy import optimize, stats
from scipy.special import gamma as sp_gamma

from thzvr.errors import DataError, DomainError, ModelDomainError
from thzvr.evt import (
    GevParams,
    empirical_tvar,
    fit_block_maxima,
    gev_cdf,
    gev_from_moments,
    gev_mean,
    gev_pdf,
    gev_variance,
    order_stat_mean,
    solve_shape,
    tvar,
    var_quantile,
)


def scan_shape(n):
    # dense scan oracle using scipy's gamma, independent of the solver
    xs = np.linspace(1e-6, 1 - 1e-6, 2_000_001)
    lhs = xs / (sp_gamma(1 - xs) - 1)
    rhs = math.sqrt(2 * n - 1) / (n - 1)
    return xs[np.argmin(np.abs(lhs - rhs))]


def quantile_oracle(p, a):
    # invert the cdf numerically
    return optimize.brentq(lambda x: gev_cdf(p, x) - a, p.mu_E - 50 * p.sigma_E, p.mu_E + 1e6 * p.sigma_E,
                           xtol=1e-14, rtol=1e-15)


def tvar_oracle(p, a):
    body, _ = spi.quad(lambda u: var_quantile(p, u), a, 1, limit=500, epsabs=0, epsrel=1e-12)
    return body / (1 - a)


class TestOrderStatistic:
    def test_values(self):
        assert order_stat_mean(3.0, 4.0, 1) == 3.0
        assert order_stat_mean(3.0, 4.0, 2) == pytest.approx(3.0 + math.sqrt(4.0 / 3.0))

    def test_monotone(self):
        v = [order_stat_mean(1.0, 2.0, n) for n in range(1, 200)]
        assert np.all(np.diff(v) >= 0)


class TestShape:
    def test_n10(self):
        xi = solve_shape(10)
        assert xi == pytest.approx(0.60, abs=0.01)
        assert xi == pytest.approx(scan_shape(10), abs=1e-5)

    @pytest.mark.parametrize("n", [3, 5, 10, 60, 1000])
    def test_residual(self, n):
        xi = solve_shape(n)
        assert abs(xi / (sp_gamma(1 - xi) - 1) - math.sqrt(2 * n - 1) / (n - 1)) < 1e-8

    def test_large_n_tends_to_one(self):
        assert solve_shape(10**7) > 0.99
        vals = [solve_shape(n) for n in (3, 10, 100, 1000, 10**5)]
        assert np.all(np.diff(vals) > 0)

    @pytest.mark.parametrize("n", [0, 1, 2, 2.5])
    def test_small_n(self, n):
        with pytest.raises(DomainError):
            solve_shape(n)


class TestFromMoments:
    def test_identification(self):
        p = gev_from_moments(0.020, 0.010**2, 10)
        assert (p.mu_E, p.sigma_E) == (0.020, pytest.approx(0.010))
        assert p.xi_E == pytest.approx(0.60, abs=0.01)

    @given(st.floats(1e-4, 1.0), st.floats(1e-8, 1.0), st.integers(3, 5000))
    @settings(max_examples=100)
    def test_closure(self, mean, var, n):
        p = gev_from_moments(mean, var, n)
        assert gev_mean(p) == pytest.approx(order_stat_mean(mean, var, n), rel=1e-9)

    def test_exact_mode(self):
        p = gev_from_moments(1.0, 0.25, 3, mode="exact")
        assert gev_variance(p) == pytest.approx(0.25, rel=1e-10)
        assert gev_mean(p) == pytest.approx(order_stat_mean(1.0, 0.25, 3), rel=1e-10)
        with pytest.raises(ModelDomainError):
            gev_from_moments(1.0, 0.25, 10, mode="exact")

    def test_zero_variance(self):
        with pytest.raises(DomainError):
            gev_from_moments(1.0, 0.0, 10)


class TestDistribution:
    def test_gumbel_at_location(self):
        assert gev_cdf(GevParams(2.0, 3.0, 0.0), 2.0) == pytest.approx(math.exp(-1))

    def test_lower_endpoint(self):
        p = GevParams(1.0, 2.0, 0.5)
        assert p.lower_endpoint == pytest.approx(-3.0)
        assert gev_cdf(p, -3.0 + 1e-9) < 1e-12
        assert gev_cdf(p, -10.0) == 0.0
        assert gev_pdf(p, -10.0) == 0.0

    def test_matches_scipy(self):
        # scipy's genextreme uses c = -xi
        x = np.linspace(-2, 20, 50)
        for xi in (-0.2, 0.1, 0.6):
            p = GevParams(0.5, 1.5, xi)
            ref = stats.genextreme(-xi, loc=0.5, scale=1.5)
            assert np.allclose(gev_cdf(p, x), ref.cdf(x), atol=1e-12)
            assert np.allclose(gev_pdf(p, x), ref.pdf(x), atol=1e-12)

    @pytest.mark.parametrize("xi", [0.0, 0.1, 0.3, 0.8])
    def test_pdf_integrates_to_one(self, xi):
        p = GevParams(0.0, 1.0, xi)
        lo = p.lower_endpoint if xi > 0 else -30.0
        cuts = [lo] + [var_quantile(p, a) for a in (0.5, 0.99, 0.9999, 1 - 1e-7)]
        total = sum(spi.quad(lambda x: gev_pdf(p, x), a, b, limit=200)[0] for a, b in zip(cuts, cuts[1:]))
        assert total + 1e-7 == pytest.approx(1.0, abs=1e-4)


class TestRisk:
    def test_var_at_inverse_e(self):
        for xi in (0.0, 0.2, 0.9):
            assert var_quantile(GevParams(4.0, 2.0, xi), math.exp(-1)) == pytest.approx(4.0)

    def test_var_spot(self):
        p = GevParams(0.0, 1.0, 0.1)
        assert var_quantile(p, 0.9) == pytest.approx(2.524, abs=1e-3)
        assert var_quantile(p, 0.9) == pytest.approx(quantile_oracle(p, 0.9), rel=1e-10)

    @pytest.mark.parametrize("xi", [0.0, 0.1, 0.3, 0.6, 0.83])
    @pytest.mark.parametrize("a", [0.5, 0.9, 0.95, 0.99])
    def test_round_trip(self, xi, a):
        p = GevParams(0.01, 0.002, xi)
        assert gev_cdf(p, var_quantile(p, a)) == pytest.approx(a, abs=1e-8)

    def test_var_increasing(self):
        a = np.linspace(0.01, 0.999, 100)
        assert np.all(np.diff(var_quantile(GevParams(0, 1, 0.4), a)) > 0)

    def test_tvar_spot(self):
        p = GevParams(0.0, 1.0, 0.1)
        assert tvar(p, 0.9) == pytest.approx(3.95, abs=0.01)

    @pytest.mark.parametrize("xi", [0.1, 0.3])
    @pytest.mark.parametrize("a", [0.9, 0.99])
    def test_tvar_quadrature(self, xi, a):
        p = GevParams(0.0, 1.0, xi)
        assert tvar(p, a) == pytest.approx(tvar_oracle(p, a), rel=1e-6)

    def test_tvar_gumbel_branch(self):
        p = GevParams(0.0, 1.0, 0.0)
        near = GevParams(0.0, 1.0, 1e-7)
        assert tvar(p, 0.9) == pytest.approx(tvar(near, 0.9), rel=1e-5)

    @given(st.floats(0.0, 0.95), st.floats(0.01, 0.995))
    def test_tvar_dominates_var(self, xi, a):
        p = GevParams(1.0, 0.5, xi)
        assert tvar(p, a) >= var_quantile(p, a)

    def test_tvar_non_decreasing(self):
        p = GevParams(0.0023, 0.0014, 0.83)
        vals = [tvar(p, a) for a in np.linspace(0.5, 0.999, 60)]
        assert np.all(np.diff(vals) >= 0)

    def test_infinite_tail_mean(self):
        with pytest.raises(ModelDomainError):
            tvar(GevParams(0, 1, 1.0), 0.9)
        with pytest.raises(DomainError):
            tvar(GevParams(0, 1, 0.5), 1.0)


class TestEmpiricalTvar:
    def test_integers(self):
        assert empirical_tvar(np.arange(1, 101), 0.9) == pytest.approx(95.5)

    def test_constant(self):
        assert empirical_tvar(np.full(500, 3.0), 0.9) == 3.0

    def test_insufficient(self):
        with pytest.raises(DataError):
            empirical_tvar(np.arange(50), 0.9)
        with pytest.raises(DataError):
            empirical_tvar(np.arange(500), 0.9, min_tail=100)

    def test_gev_samples(self):
        p = GevParams(0.0, 1.0, 0.3)
        rng = np.random.Generator(np.random.Philox(8))
        x = var_quantile(p, rng.uniform(1e-16, 1 - 1e-16, 1_000_000))
        assert empirical_tvar(x, 0.9) == pytest.approx(tvar(p, 0.9), rel=0.05)


class TestFit:
    def test_recovers_known_gev(self):
        xi = solve_shape(3)
        truth = GevParams(0.02, 0.005, xi)
        rng = np.random.Generator(np.random.Philox(21))
        maxima = var_quantile(truth, rng.uniform(1e-12, 1 - 1e-12, 10_000))
        fit = fit_block_maxima(maxima, 3)
        assert fit.method == "lmoments"
        assert fit.params.mu_E == pytest.approx(0.02, rel=0.05)
        assert fit.params.sigma_E == pytest.approx(0.005, rel=0.05)

    def test_moment_matching_option(self):
        xi = solve_shape(3)
        truth = GevParams(0.02, 0.005, xi)
        rng = np.random.Generator(np.random.Philox(23))
        maxima = var_quantile(truth, rng.uniform(1e-12, 1 - 1e-12, 100_000))
        fit = fit_block_maxima(maxima, 3, method="moments")
        assert fit.params.mu_E == pytest.approx(0.02, rel=0.05)
        assert fit.params.sigma_E == pytest.approx(0.005, rel=0.1)
        with pytest.raises(ModelDomainError):
            fit_block_maxima(maxima, 60, method="moments")

    def test_heavy_shape_uses_quantiles(self):
        xi = solve_shape(60)
        truth = GevParams(0.002, 0.0014, xi)
        rng = np.random.Generator(np.random.Philox(22))
        maxima = var_quantile(truth, rng.uniform(1e-12, 1 - 1e-12, 10_000))
        fit = fit_block_maxima(maxima, 60)
        assert fit.method == "quantiles"
        assert fit.params.mu_E == pytest.approx(0.002, rel=0.05)
        assert fit.params.sigma_E == pytest.approx(0.0014, rel=0.05)

    def test_blocks_from_raw_samples(self):
        x = np.arange(100.0)
        fit = fit_block_maxima(x, 3, block=4)
        assert fit.maxima.tolist() == list(np.arange(3.0, 100.0, 4.0))

    def test_degenerate(self):
        with pytest.raises(DataError):
            fit_block_maxima(np.ones(100), 3)
        with pytest.raises(DataError):
            fit_block_maxima(np.arange(10.0), 3)

    def test_deterministic(self):
        x = np.random.Generator(np.random.Philox(1)).exponential(size=300)
        a, b = fit_block_maxima(x, 5, block=5), fit_block_maxima(x, 5, block=5)
        assert a.params == b.params


@pytest.mark.xfail(strict=True, reason="identification puts the GEV location at the mean delay (about 2.3 ms), "
                                       "so almost no mass reaches the 30-100 ms band")
def test_default_gev_mass_in_landmark_band():
    from thzvr.analysis import tail_report
    from thzvr.config import NetworkConfig

    p = tail_report(NetworkConfig()).gev
    assert gev_cdf(p, 0.100) - gev_cdf(p, 0.030) >= 0.9
