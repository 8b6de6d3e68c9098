"""Command-line entry point: ``thzvr analyze | simulate | reproduce | show-config``.

Exit codes: 0 success, 2 usage or parse error, 3 invalid configuration,
4 model-domain error, 5 insufficient data.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import analyze_rows
from .config import FIELDS, PRESETS, NetworkConfig, convert_value, describe_fields, resolve_config
from .errors import DataError, ModelDomainError, ParseError, ThzvrError
from .figures import FIGURES, build_figure, write_figure
from .sim import DEFAULT_DELTAS, run_replications, run_session

log = logging.getLogger("thzvr")

ANALYZE_SCHEMA = "thzvr-analyze v1"
CDF_SCHEMA = "thzvr-cdf v1"
AGGREGATE_SCHEMA = "thzvr-aggregate v1"
TRACE_SCHEMA = "thzvr-trace v1"
SEED_ENV = "THZVR_SEED"


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _num(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return repr(v) if np.isfinite(v) else ""


def _csv_text(schema: str, header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# {schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, (float, int, np.floating, np.integer)) else v for v in row])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(args) -> NetworkConfig:
    cfg = resolve_config(args.config)
    changes = {}
    for item in args.set or []:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or key not in FIELDS:
            raise ParseError(f"--set expects KEY=VALUE with a known key, got {item!r}")
        try:
            changes[key] = convert_value(key, raw)
        except ValueError as exc:
            raise ParseError(f"--set {key}: {exc}") from exc
    return cfg.with_(**changes).validate() if changes else cfg


def _seed(args, default: int | None) -> int | None:
    """Explicit flag, then the environment, then ``default``."""
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ParseError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    return default


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    cfg = _load(args)
    rows, cdf = analyze_rows(cfg, args.mode, args.delta or (), args.alpha_c or ())
    _emit(_csv_text(ANALYZE_SCHEMA, ["quantity", "params_hash", "value", "units"], rows), args.out)
    if cdf is not None:
        side = args.cdf_out or (f"{args.out}.cdf.csv" if args.out else "thzvr_e2e_cdf.csv")
        Path(side).write_text(_csv_text(CDF_SCHEMA, ["delay_s", "cdf"], zip(cdf.grid, cdf.values)),
                              encoding="utf-8")
        log.info("CDF grid written to %s", side)
    return 0


def cmd_simulate(args) -> int:
    cfg = _load(args)
    seed = _seed(args, cfg.seed)
    runs = cfg.runs if args.runs is None else args.runs
    if args.emit == "traces":
        cfg.validate()
        header = ["run", "seed", "request", "arrival_s", "t1_wait_s", "t1_service_s", "q2_wait_s",
                  "tx_time_s", "e2e_s", "los_fraction"]
        rows = []
        for r in range(runs):
            tr = run_session(cfg, seed + r, validate=False)
            for i in range(len(tr)):
                rows.append((r, seed + r, i, tr.request_times[i], tr.t1_wait[i], tr.t1_service[i],
                             tr.q2_wait[i], tr.tx_time[i], tr.e2e[i], tr.los_fraction[i]))
        _emit(_csv_text(TRACE_SCHEMA, header, rows), args.out)
        return 0
    deltas = tuple(args.delta) if args.delta else DEFAULT_DELTAS
    res = run_replications(cfg, runs, seed, deltas, workers=args.workers)
    rows = []

    def add(metric, value, se=float("nan")):
        rows.append((metric, value, se, runs, seed))

    add("n_requests", res.n_requests)
    add("mean_e2e", res.mean_e2e, res.mean_e2e_stderr)
    add("var_e2e", res.var_e2e)
    add("second_moment_e2e", res.second_moment_e2e)
    add("mean_t1_sojourn", *res.t1_sojourn)
    add("empirical_plos", *res.empirical_plos)
    for d in deltas:
        add(f"reliability@{d:g}", *res.reliability(d))
    for d in deltas:
        add(f"tail_reliability@{d:g}", *res.tail_reliability(d))
    m = res.block_maxima
    add("block_max_mean", m.mean(), m.std(ddof=1) / np.sqrt(m.size) if m.size > 1 else float("nan"))
    add("block_max_median", np.median(m))
    add("block_max_p99", np.quantile(m, 0.99))
    for a in args.alpha_c or (0.9,):
        try:
            add(f"empirical_tvar@{a:g}", res.empirical_tvar(a))
        except DataError as exc:
            log.warning("skipping empirical TVaR at %g: %s", a, exc)
    _emit(_csv_text(AGGREGATE_SCHEMA, ["metric", "value", "stderr", "runs", "seed"], rows), args.out)
    return 0


def cmd_reproduce(args) -> int:
    if args.set and not args.config:
        args.config = FIGURES[args.figure][1]
    cfg = _load(args) if args.config else None
    seed = _seed(args, None)
    fig = build_figure(args.figure, cfg, args.runs, seed)
    for p in write_figure(fig, args.out):
        print(p)
    return 0


def cmd_show_config(args) -> int:
    if args.fields:
        rows = describe_fields()
        _emit(_csv_text("thzvr-fields v1", ["section", "key", "default", "unit", "description"], rows), None)
        return 0
    sys.stdout.write(_load(args).to_ini())
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thzvr", description="Delay reliability of THz-served VR sessions.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress and defaults to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_default="table2_1thz"):
        sp.add_argument("-c", "--config", default=config_default,
                        help=f"preset name ({', '.join(PRESETS)}) or path to an INI file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")

    a = sub.add_parser("analyze", help="closed-form and numerical delay analysis")
    common(a)
    a.add_argument("--mode", choices=("tail", "guaranteed-los"), default="tail")
    a.add_argument("--delta", type=_float_list, help="delay thresholds in seconds, comma separated")
    a.add_argument("--alpha-c", type=_float_list, help="confidence levels, comma separated")
    a.add_argument("--out", help="CSV output file (default stdout)")
    a.add_argument("--cdf-out", help="sidecar file for the CDF grid in guaranteed-los mode")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="Monte Carlo sessions")
    common(s)
    s.add_argument("--runs", type=int, help="number of sessions (default from config)")
    s.add_argument("--seed", type=int, help=f"base seed (default ${SEED_ENV}, then config)")
    s.add_argument("--emit", choices=("aggregate", "traces"), default="aggregate")
    s.add_argument("--delta", type=_float_list, help="delay thresholds in seconds for reliability rows")
    s.add_argument("--alpha-c", type=_float_list, help="confidence levels for empirical TVaR rows")
    s.add_argument("--workers", type=int, default=1, help="worker processes")
    s.add_argument("--out", help="CSV output file (default stdout)")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reproduce", help="plot-ready data for one figure")
    r.add_argument("figure", choices=list(FIGURES))
    r.add_argument("--out", required=True, help="output directory")
    common(r, config_default=None)
    r.add_argument("--runs", type=int, help="sessions per simulated point (default from config)")
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_reproduce)

    c = sub.add_parser("show-config", help="print the resolved configuration")
    common(c)
    c.add_argument("--fields", action="store_true", help="list every key with default, unit and meaning")
    c.set_defaults(func=cmd_show_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ModelDomainError as exc:
        expr = f" [{exc.expression}]" if getattr(exc, "expression", None) else ""
        print(f"thzvr: model-domain error{expr}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ThzvrError as exc:
        print(f"thzvr: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
