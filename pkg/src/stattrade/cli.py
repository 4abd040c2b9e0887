"""Command-line entry point.

    stattrade run grid --config run.ini [--family MA] [--costs on|off|both] [--jobs N]
    stattrade run tests --matrix m.csv --alpha 0.05,0.10 --seed 7 [--config run.ini]
    stattrade run select --matrix m.csv [--pool ids.txt | --reports reports.csv]
    stattrade gen gbm --out bars.csv --days 60 --sigma 0.25 --seed 1
    stattrade gen planted --out m.csv --strategies 20 --days 500 --effect 0.2 --seed 1

Exit status: 0 on success, 1 when any strategy failed, 2 on bad input.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from datetime import date
from pathlib import Path

from .config import OUTPUT_ENV, ConfigError, load_config
from .datagen import GbmSpec, gbm_series, planted_matrix
from .ingest import IngestError, write_bars
from .pipeline import pool_from_reports, read_pool, run_grid, run_select, run_tests
from .snooping import SnoopingError, read_matrix, write_matrix

logger = logging.getLogger("stattrade")


def _alphas(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha list {text!r}") from None


def _out_dir(args, config=None) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    if os.environ.get(OUTPUT_ENV):
        return Path(os.environ[OUTPUT_ENV])
    return config.output_dir if config is not None else Path("out")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stattrade", description="Intraday index-futures strategy research.")
    p.add_argument("-v", "--verbose", action="store_true")
    top = p.add_subparsers(dest="command", required=True)

    run = top.add_parser("run", help="run a workflow").add_subparsers(dest="workflow", required=True)
    g = run.add_parser("grid", help="backtest the strategy grid")
    g.add_argument("--config", required=True)
    g.add_argument("--family", choices=["MA", "KDJ", "BOLL"])
    g.add_argument("--strategies", help="comma-separated strategy names instead of a family")
    g.add_argument("--costs", choices=["on", "off", "both"])
    g.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    g.add_argument("--top-n", type=int)
    g.add_argument("--no-select", action="store_true", help="skip rolling selection on the SR pool")
    g.add_argument("--out")

    t = run.add_parser("tests", help="SPA, Step-SPA and ADF tests")
    t.add_argument("--matrix", required=True)
    t.add_argument("--alpha", type=_alphas)
    t.add_argument("--seed", type=int)
    t.add_argument("--B", type=int)
    t.add_argument("--Q", type=float)
    t.add_argument("--omega", choices=["nw", "bootstrap", "kernel"], help="studentising scale (default nw)")
    t.add_argument("--config")
    t.add_argument("--no-adf", action="store_true")
    t.add_argument("--out")

    s = run.add_parser("select", help="rolling train/test selection table")
    s.add_argument("--matrix", required=True)
    src = s.add_mutually_exclusive_group()
    src.add_argument("--pool", help="file of strategy ids, one per line")
    src.add_argument("--reports", help="reports CSV; pool is every strategy with SR above --threshold")
    s.add_argument("--threshold", type=float, default=1.5)
    s.add_argument("--out")

    gen = top.add_parser("gen", help="synthetic data").add_subparsers(dest="kind", required=True)
    b = gen.add_parser("gbm", help="GBM intraday bars")
    b.add_argument("--out", required=True)
    b.add_argument("--days", type=int, default=20)
    b.add_argument("--sigma", type=float, default=0.25)
    b.add_argument("--drift", type=float, default=0.0)
    b.add_argument("--p0", type=float, default=3000.0)
    b.add_argument("--freq", type=int, default=15)
    b.add_argument("--start", type=date.fromisoformat, default=date(2016, 1, 4))
    b.add_argument("--seed", type=int, default=0)

    m = gen.add_parser("planted", help="performance matrix with one planted winner")
    m.add_argument("--out", required=True)
    m.add_argument("--strategies", type=int, default=50)
    m.add_argument("--days", type=int, default=500)
    m.add_argument("--effect", type=float, default=0.0)
    m.add_argument("--sigma", type=float, default=1.0)
    m.add_argument("--seed", type=int, default=0)
    return p


def _grid(args) -> int:
    grid = args.strategies or args.family
    config = load_config(args.config, grid=grid, cost_mode=args.costs, top_n=args.top_n, jobs=args.jobs,
                         selector=False if args.no_select else None)
    res = run_grid(config, _out_dir(args, config))
    for name, err in res.errors.items():
        print(f"error: {name}: {err}", file=sys.stderr)
    print(f"{len(res.outcomes) - len(res.errors)}/{len(res.outcomes)} strategies, {len(res.files)} files")
    return 0 if res.ok else 1


def _tests(args) -> int:
    config = load_config(args.config, alphas=args.alpha, seed=args.seed, B=args.B, Q=args.Q, omega=args.omega)
    files = run_tests(config, args.matrix, _out_dir(args, config), with_adf=not args.no_adf)
    print(f"{len(files)} files written")
    return 0


def _select(args) -> int:
    matrix = read_matrix(args.matrix)
    if args.pool:
        ids = read_pool(args.pool)
    elif args.reports:
        ids = pool_from_reports(args.reports, args.threshold)
        if not ids:
            raise ValueError(f"no strategy in {args.reports} has SR above {args.threshold}")
    else:
        ids = None
    files = run_select(matrix, ids, _out_dir(args))
    if not files:
        raise ValueError("no window plan fits the matrix")
    print(f"{len(files)} files written")
    return 0


def _gen(args) -> int:
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "gbm":
        spec = GbmSpec(p0=args.p0, sigma=args.sigma, r=args.drift, frequency=args.freq, days=args.days,
                       seed=args.seed, start=args.start)
        write_bars(gbm_series(spec), args.out)
    else:
        write_matrix(planted_matrix(args.strategies, args.days, args.effect, args.seed, sigma=args.sigma), args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"grid": _grid, "tests": _tests, "select": _select}.get(getattr(args, "workflow", None), _gen)
    try:
        return handler(args)
    except (ConfigError, IngestError, SnoopingError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
