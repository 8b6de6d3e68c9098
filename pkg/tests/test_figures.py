import numpy as np
import pytest

from thzvr.analysis import analyze_rows, guaranteed_report, moments, tail_report
from thzvr.config import NetworkConfig
from thzvr.errors import ParseError
from thzvr.figures import FIGURES, build_figure, curve_csv, manifest, write_figure

RUNS = 30


@pytest.fixture(scope="module")
def figures():
    return {f: build_figure(f, runs=RUNS, seed=1) for f in FIGURES}


def test_all_ids_present():
    assert set(FIGURES) == {"3a", "3b", "4", "5", "6a", "6b", "7a", "7b", "8a", "8b", "9", "10"}


def test_unknown_figure():
    with pytest.raises(ParseError):
        build_figure("2")


def test_curves_are_well_formed(figures):
    for fig in figures.values():
        assert fig.curves
        for c in fig.curves:
            assert c.x.shape == c.analytic.shape == c.simulated.shape == c.stderr.shape


def test_delay_decreases_with_bandwidth(figures):
    for fid in ("6a", "6b"):
        for c in figures[fid].curves:
            assert np.all(np.diff(c.analytic) < 0), (fid, c.name)


def test_reliability_rises_with_bandwidth(figures):
    for c in figures["7a"].curves:
        assert np.all(np.diff(c.analytic) >= 0)


def test_tvar_increases_with_confidence(figures):
    c = figures["8a"].curves[0]
    assert np.all(np.diff(c.analytic) > 0)
    i90, i99 = list(c.x).index(0.9), list(c.x).index(0.99)
    # landmark values 63 ms and 450 ms, +-20 %
    assert 0.063 * 0.8 <= c.analytic[i90] <= 0.063 * 1.2
    assert 0.450 * 0.8 <= c.analytic[i99] <= 0.450 * 1.2


def test_beam_tracking_raises_tvar(figures):
    plain, beam = figures["8b"].curves
    assert np.all(beam.analytic > plain.analytic)
    assert np.all(np.diff(plain.analytic) <= 0)


def test_interference_radius_hurts_more_at_long_range(figures):
    curves = figures["10"].curves
    drops = [c.analytic[0] - c.analytic[-1] for c in curves]
    assert all(np.all(np.diff(c.analytic) <= 0) for c in curves)
    assert drops == sorted(drops)


def test_csv_and_manifest(tmp_path, figures):
    fig = figures["3b"]
    text = curve_csv(fig, fig.curves[0])
    assert text.startswith("# thzvr-figure v1")
    assert text.splitlines()[1] == "x,analytic_y,simulated_y,stderr"
    files = write_figure(fig, tmp_path)
    assert (tmp_path / "fig3b_manifest.txt").exists()
    assert len(files) == len(fig.curves) + 1
    kv = dict(line.split(": ", 1) for line in manifest(fig, ["a"]).splitlines())
    assert kv["config_hash"] == fig.config_hash


def test_figure_deterministic():
    a, b = build_figure("6a", runs=10, seed=2), build_figure("6a", runs=10, seed=2)
    for x, y in zip(a.curves, b.curves):
        assert np.array_equal(x.simulated, y.simulated)


def test_tx_pdf_figure_matches_histogram(figures):
    c = figures["3b"].curves[0]
    assert np.max(np.abs(c.analytic - c.simulated)) < 0.1 * np.max(c.analytic)


# -- analysis helpers -----------------------------------------------------

def test_analysis_modes_agree_on_guaranteed_mean():
    cfg = NetworkConfig()
    assert moments(cfg, guaranteed_los=True).mean_e2e < moments(cfg).mean_e2e
    rep = guaranteed_report(cfg, (0.01,))
    assert rep.cdf.mean() == pytest.approx(moments(cfg, guaranteed_los=True).mean_e2e, rel=0.05)


def test_tail_report_reliability_is_gev_cdf():
    rep = tail_report(NetworkConfig())
    assert 0 < rep.reliability(0.01) < rep.reliability(0.02) < 1


def test_analyze_rows_unknown_mode():
    with pytest.raises(ValueError):
        analyze_rows(NetworkConfig(), "average")
