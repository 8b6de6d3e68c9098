"""Plot-ready data for the published figures: analytic curve, simulated curve, standard error.

Each figure is a list of :class:`Curve` objects sharing one x axis. Nothing
is rendered; :func:`write_figure` emits one CSV per curve plus a manifest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import guaranteed_report, link, moments, tail_report
from .channel import los_rate, sample_truncated_gaussian
from .config import NetworkConfig, load_preset
from .errors import DataError, ParseError
from .evt import gev_pdf
from .sim import run_replications, run_session, stream
from .reliability import tx_delay_pdf

SCHEMA = "thzvr-figure v1"
BANDWIDTHS = (5e9, 10e9, 15e9, 20e9, 25e9, 30e9)
ABSORPTIONS = (0.0, 0.0016, 0.01, 0.05, 0.1, 0.2)
ALPHAS = (0.8, 0.85, 0.9, 0.925, 0.95, 0.975, 0.99)
DELTAS = (0.010, 0.020)
RADII = (2.0, 4.0, 6.0, 8.0, 10.0)
LINK_DISTANCES = (1.0, 1.5, 2.0)
FIG10_DELTA = 0.005
BEAM_DELAY = 0.005
TX_SAMPLES = 100_000


@dataclass(frozen=True)
class Curve:
    name: str
    x: np.ndarray
    analytic: np.ndarray
    simulated: np.ndarray
    stderr: np.ndarray


@dataclass(frozen=True)
class Figure:
    figure_id: str
    title: str
    x_label: str
    y_label: str
    preset: str
    config_hash: str
    runs: int
    seed: int
    curves: list[Curve] = field(default_factory=list)
    notes: str = ""


def _nan(n: int) -> np.ndarray:
    return np.full(n, np.nan)


def _arr(v) -> np.ndarray:
    return np.asarray(v, dtype=float)


# --------------------------------------------------------------------------
# individual figures
# --------------------------------------------------------------------------

def _fig3a(cfg, runs, seed):
    rep = tail_report(cfg)
    maxima = run_replications(cfg, runs, seed).block_maxima
    edges = np.linspace(0.0, 0.150, 61)
    x = 0.5 * (edges[1:] + edges[:-1])
    counts, _ = np.histogram(maxima, edges)
    width = edges[1] - edges[0]
    sim = counts / (maxima.size * width)
    se = np.sqrt(counts) / (maxima.size * width)
    return [Curve("tail_delay_pdf", x, _arr(gev_pdf(rep.gev, x)), sim, se)]


def _fig3b(cfg, runs, seed):
    lk = link(cfg)
    ch = cfg.channel_params()
    tx = tx_delay_pdf(lk, cfg.content_bits, cfg.bandwidth)
    lo, hi = tx.grid[0], tx.grid[-1]
    edges = np.linspace(lo, lo + 0.5 * (hi - lo), 61)
    x = 0.5 * (edges[1:] + edges[:-1])
    i = sample_truncated_gaussian(lk.mu_I, lk.sigma_I, TX_SAMPLES, stream(seed, "interference"))
    _, rate = los_rate(ch, i)
    alpha = cfg.content_bits / rate
    counts, _ = np.histogram(alpha, edges)
    width = edges[1] - edges[0]
    return [Curve("tx_delay_pdf", x, _arr(tx(x)), counts / (alpha.size * width),
                  np.sqrt(counts) / (alpha.size * width))]


def _session_figure(cfg, runs, seed):
    rep = tail_report(cfg)
    cfg.validate()
    traces = [run_session(cfg, seed + s, validate=False) for s in range(runs)]
    times = np.arange(60.0, cfg.session_length + 1e-9, 60.0)
    avg, avg_se, tail, tail_se, tail_an = [], [], [], [], []
    for t in times:
        kept = [tr.e2e[tr.request_times <= t] for tr in traces]
        pooled = np.concatenate(kept)
        avg.append(pooled.mean())
        avg_se.append(pooled.std(ddof=1) / math.sqrt(pooled.size))
        peaks = np.array([k.max() for k in kept if k.size])
        tail.append(peaks.mean())
        tail_se.append(peaks.std(ddof=1) / math.sqrt(peaks.size) if peaks.size > 1 else np.nan)
        n = max(3, int(round(cfg.arrival_rate * t)))
        tail_an.append(tail_report(cfg.with_(requests_per_session=n)).gev.mean())
    one = traces[0]
    return [
        Curve("average", times, np.full(times.size, rep.moments.mean_e2e), _arr(avg), _arr(avg_se)),
        Curve("instantaneous", one.request_times, np.full(len(one), rep.moments.mean_e2e), one.e2e,
              _nan(len(one))),
        Curve("tail", times, _arr(tail_an), _arr(tail), _arr(tail_se)),
    ]


def _delay_vs(cfg, runs, seed, key, values):
    blocked_an, blocked_sim, blocked_se = [], [], []
    clear_an, clear_sim, clear_se = [], [], []
    for v in values:
        c = cfg.with_(**{key: v})
        blocked_an.append(moments(c).mean_e2e)
        clear_an.append(moments(c, guaranteed_los=True).mean_e2e)
        rb = run_replications(c, runs, seed)
        rc = run_replications(c.with_(enabled=False), runs, seed)
        blocked_sim.append(rb.mean_e2e)
        blocked_se.append(rb.mean_e2e_stderr)
        clear_sim.append(rc.mean_e2e)
        clear_se.append(rc.mean_e2e_stderr)
    x = _arr(values)
    return [
        Curve("e2e_delay_blockage", x, _arr(blocked_an), _arr(blocked_sim), _arr(blocked_se)),
        Curve("e2e_delay_guaranteed_los", x, _arr(clear_an), _arr(clear_sim), _arr(clear_se)),
    ]


def _reliability_vs(cfg, runs, seed, key, values, deltas=DELTAS):
    curves = []
    tail = {d: ([], [], []) for d in deltas}
    clear = {d: ([], [], []) for d in deltas}
    for v in values:
        c = cfg.with_(**{key: v})
        rep = tail_report(c)
        g = guaranteed_report(c, deltas)
        rb = run_replications(c, runs, seed)
        rc = run_replications(c.with_(enabled=False), runs, seed)
        for d in deltas:
            p, se = rb.tail_reliability(d)
            tail[d][0].append(rep.reliability(d))
            tail[d][1].append(p)
            tail[d][2].append(se)
            p, se = rc.reliability(d)
            clear[d][0].append(g.reliability(d))
            clear[d][1].append(p)
            clear[d][2].append(se)
    x = _arr(values)
    for d in deltas:
        ms = f"{d * 1e3:g}ms"
        curves.append(Curve(f"tail_reliability_{ms}", x, *map(_arr, tail[d])))
        curves.append(Curve(f"reliability_guaranteed_los_{ms}", x, *map(_arr, clear[d])))
    return curves


def _fig6a(cfg, runs, seed):
    return _delay_vs(cfg, runs, seed, "bandwidth", BANDWIDTHS)


def _fig7a(cfg, runs, seed):
    return _reliability_vs(cfg, runs, seed, "bandwidth", BANDWIDTHS)


def _empirical_tvar(res, a):
    try:
        return res.empirical_tvar(a)
    except DataError:
        return np.nan


def _fig8a(cfg, runs, seed):
    rep = tail_report(cfg)
    res = run_replications(cfg, runs, seed)
    x = _arr(ALPHAS)
    return [Curve("tvar", x, _arr([rep.tvar(a) for a in ALPHAS]),
                  _arr([_empirical_tvar(res, a) for a in ALPHAS]), _nan(x.size))]


def _fig8b(cfg, runs, seed, alpha=0.95):
    curves = []
    for name, beam in (("tvar", 0.0), ("tvar_beam_tracking", BEAM_DELAY)):
        an, sim = [], []
        for w in BANDWIDTHS:
            c = cfg.with_(bandwidth=w, beam_tracking_delay=beam)
            an.append(tail_report(c).tvar(alpha))
            sim.append(_empirical_tvar(run_replications(c, runs, seed), alpha))
        curves.append(Curve(name, _arr(BANDWIDTHS), _arr(an), _arr(sim), _nan(len(BANDWIDTHS))))
    return curves


def _fig9(cfg, runs, seed):
    return (_delay_vs(cfg, runs, seed, "absorption", ABSORPTIONS)
            + _reliability_vs(cfg, runs, seed, "absorption", ABSORPTIONS))


def _fig10(cfg, runs, seed):
    curves = []
    for r0 in LINK_DISTANCES:
        an, sim, se = [], [], []
        for om in RADII:
            c = cfg.with_(link_distance=r0, interference_radius=om, enabled=False)
            an.append(guaranteed_report(c, (FIG10_DELTA,)).reliability(FIG10_DELTA))
            p, s = run_replications(c, runs, seed).reliability(FIG10_DELTA)
            sim.append(p)
            se.append(s)
        curves.append(Curve(f"reliability_r0_{r0:g}m", _arr(RADII), _arr(an), _arr(sim), _arr(se)))
    return curves


# id -> (builder, preset, title, x label, y label)
FIGURES = {
    "3a": (_fig3a, "table2_1thz", "PDF of the session-maximum delay", "delay_s", "density_per_s"),
    "3b": (_fig3b, "table2_1thz", "PDF of the transmission delay, guaranteed LoS", "delay_s", "density_per_s"),
    "4": (_session_figure, "table2_1thz", "Delay over a VR session at 1 THz", "session_time_s", "delay_s"),
    "5": (_session_figure, "table2_0p2thz", "Delay over a VR session at 0.2 THz", "session_time_s", "delay_s"),
    "6a": (_fig6a, "table2_1thz", "Mean delay versus bandwidth at 1 THz", "bandwidth_hz", "delay_s"),
    "6b": (_fig6a, "table2_0p2thz", "Mean delay versus bandwidth at 0.2 THz", "bandwidth_hz", "delay_s"),
    "7a": (_fig7a, "table2_1thz", "Reliability versus bandwidth at 1 THz", "bandwidth_hz", "probability"),
    "7b": (_fig7a, "table2_0p2thz", "Reliability versus bandwidth at 0.2 THz", "bandwidth_hz", "probability"),
    "8a": (_fig8a, "table2_1thz", "TVaR versus confidence level", "alpha_c", "tvar_s"),
    "8b": (_fig8b, "table2_1thz", "TVaR at 95% confidence versus bandwidth", "bandwidth_hz", "tvar_s"),
    "9": (_fig9, "table2_1thz", "Delay and reliability versus molecular absorption", "absorption_per_m", "delay_s | probability"),
    "10": (_fig10, "table2_1thz", "Guaranteed-LoS reliability at 5 ms versus interference radius", "interference_radius_m", "probability"),
}


def build_figure(figure_id: str, config: NetworkConfig | None = None, runs: int | None = None,
                 seed: int | None = None) -> Figure:
    if figure_id not in FIGURES:
        raise ParseError(f"unknown figure {figure_id!r}; choose from {', '.join(FIGURES)}")
    builder, preset, title, xl, yl = FIGURES[figure_id]
    cfg = config if config is not None else load_preset(preset)
    runs = cfg.runs if runs is None else runs
    seed = cfg.seed if seed is None else seed
    curves = builder(cfg, runs, seed)
    return Figure(figure_id, title, xl, yl, preset if config is None else "custom", cfg.params_hash(),
                  runs, seed, curves)


def _fmt(v: float) -> str:
    return "" if not np.isfinite(v) else repr(float(v))


def curve_csv(fig: Figure, curve: Curve) -> str:
    lines = [f"# {SCHEMA}; figure={fig.figure_id}; curve={curve.name}; x={fig.x_label}; y={fig.y_label}",
             "x,analytic_y,simulated_y,stderr"]
    for row in zip(curve.x, curve.analytic, curve.simulated, curve.stderr):
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def manifest(fig: Figure, files: list[str]) -> str:
    entries = [
        ("schema", SCHEMA),
        ("figure", fig.figure_id),
        ("title", fig.title),
        ("preset", fig.preset),
        ("config_hash", fig.config_hash),
        ("runs", str(fig.runs)),
        ("seed", str(fig.seed)),
        ("x_label", fig.x_label),
        ("y_label", fig.y_label),
        ("stderr", "standard error of the simulated value; empty where not defined"),
        ("tolerance_statistical", "3 standard errors"),
        ("curves", ", ".join(c.name for c in fig.curves)),
        ("files", ", ".join(files)),
    ]
    return "".join(f"{k}: {v}\n" for k, v in entries)


def write_figure(fig: Figure, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for c in fig.curves:
        p = out / f"fig{fig.figure_id}_{c.name}.csv"
        p.write_text(curve_csv(fig, c), encoding="utf-8")
        written.append(p)
    m = out / f"fig{fig.figure_id}_manifest.txt"
    m.write_text(manifest(fig, [p.name for p in written]), encoding="utf-8")
    return written + [m]
