"""Batch workflows: strategy grid, stationarity and snooping tests, rolling selection."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import indicators as ind
from .config import RunConfig
from .ingest import BarSeries, CsvFormat, IngestError, log_returns, parse_bars, resample
from .metrics import REPORT_COLUMNS, BacktestReport, report
from .backtest import equity_curve, run_backtest
from .reports import write_csv, write_json, write_svg
from .selector import SHARPE_THRESHOLD, enumerate_window_plans, rolling_select
from .snooping import BootstrapPlan, PerformanceMatrix, read_matrix, spa_test, step_spa
from .stattests import AdfError, adf_test
from .strategy import FAMILIES, StrategySpec, enumerate_grid, positions_for

logger = logging.getLogger(__name__)

PARAM_NAMES = {"MA": ("n_s", "n_l", "b"), "KDJ": ("n", "m", "k"), "BOLL": ("n", "K")}
FAMILY_LABEL = {"MA": "MA", "KDJ": "KDJ", "BOLL": "Boll"}


def cost_tags(mode: str) -> list[tuple[str, bool]]:
    return {"on": [("cost", True)], "off": [("nocost", False)], "both": [("nocost", False), ("cost", True)]}[mode]


def load_series(config: RunConfig, frequencies: Sequence[int]) -> dict[int, BarSeries]:
    """Bars per frequency; frequencies without a file are resampled from the finest one given."""
    if not config.data:
        raise IngestError("no data files configured")
    fmt = CsvFormat(timestamp_format=config.timestamp_format)
    loaded = {
        f: parse_bars(p, fmt, frequency=f, calendar=config.calendar, missing=config.missing)
        for f, p in sorted(config.data.items())
    }
    out = {}
    for f in frequencies:
        if f in loaded:
            out[f] = loaded[f]
            continue
        src = [g for g in loaded if f % g == 0]
        if not src:
            raise IngestError(f"no data for {f}s bars and no finer series divides it")
        out[f] = resample(loaded[min(src)], f)
    return out


def select_specs(config: RunConfig) -> list[StrategySpec]:
    if config.families:
        return enumerate_grid(config.frequencies, config.families)
    return [StrategySpec.from_name(n) for n in config.explicit]


# Worker state is installed once per process, so only spec names cross process boundaries.
_WORKER: dict = {}


def _init_worker(series: dict, config: RunConfig, tags: list) -> None:
    _WORKER.update(series=series, config=config, tags=tags)


@dataclass
class StrategyOutcome:
    name: str
    reports: dict = field(default_factory=dict)  # tag -> BacktestReport
    d: dict = field(default_factory=dict)  # tag -> daily log returns
    equity: dict = field(default_factory=dict)  # tag -> currency equity
    error: str | None = None


def _evaluate(name: str) -> StrategyOutcome:
    out = StrategyOutcome(name)
    try:
        spec = StrategySpec.from_name(name)
        config: RunConfig = _WORKER["config"]
        series = _WORKER["series"][spec.frequency]
        pos = positions_for(spec, series, config.cross_day_windows)
        for tag, costs in _WORKER["tags"]:
            bt = config.backtest(costs)
            daily, ledger = run_backtest(series, pos, bt, name)
            out.reports[tag] = report(daily, ledger, bt, name)
            out.d[tag] = np.array([x.d for x in daily])
            out.equity[tag] = equity_curve(daily, bt).currency
    except Exception as exc:  # one bad cell must not abort the grid
        out.error = f"{type(exc).__name__}: {exc}"
        logger.error("strategy %s failed: %s", name, out.error)
    return out


def evaluate_grid(
    series: dict[int, BarSeries], config: RunConfig, specs: Sequence[StrategySpec], jobs: int | None = None
) -> list[StrategyOutcome]:
    """Outcomes in grid order, independent of the number of worker processes."""
    tags = cost_tags(config.cost_mode)
    names = [s.name for s in specs]
    jobs = jobs if jobs is not None else config.jobs
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1 or len(names) < 2:
        _init_worker(series, config, tags)
        return [_evaluate(n) for n in names]
    with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(series, config, tags)) as pool:
        return list(pool.map(_evaluate, names, chunksize=max(1, len(names) // (4 * jobs))))


def _report_row(spec: StrategySpec, r: BacktestReport) -> list:
    return [r.strategy, FAMILY_LABEL[spec.family], spec.frequency, *r.row().values(), r.days]


@dataclass
class GridResult:
    outcomes: list[StrategyOutcome]
    files: list[Path]
    errors: dict[str, str]

    @property
    def ok(self) -> bool:
        return not self.errors


def run_grid(config: RunConfig, out_dir: str | Path | None = None, jobs: int | None = None) -> GridResult:
    """Backtest every selected cell and write reports, matrices and equity curves."""
    out = Path(out_dir) if out_dir is not None else config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    specs = select_specs(config)
    series = load_series(config, sorted({s.frequency for s in specs}))
    outcomes = evaluate_grid(series, config, specs, jobs)
    errors = {o.name: o.error for o in outcomes if o.error}
    files: list[Path] = []
    summary: dict = {"strategies": len(specs), "errors": errors, "cost_modes": {}}
    good = [(s, o) for s, o in zip(specs, outcomes) if not o.error]
    for tag, _ in cost_tags(config.cost_mode):
        header = ["strategy", "family", "frequency", *REPORT_COLUMNS, "days"]
        files.append(write_csv(out / f"reports_{tag}.csv", header, (_report_row(s, o.reports[tag]) for s, o in good)))
        for fam in FAMILIES:
            for f in config.frequencies:
                cells = [(s, o) for s, o in good if s.family == fam and s.frequency == f]
                if not cells:
                    continue
                rows = ([*s.params, *o.reports[tag].row().values()] for s, o in cells)
                path = out / f"appendix_{tag}_{FAMILY_LABEL[fam]}_{f}.csv"
                files.append(write_csv(path, [*PARAM_NAMES[fam], *REPORT_COLUMNS], rows))
        top = []
        if good:
            by_freq: dict[int, list] = {}
            for s, o in good:
                by_freq.setdefault(s.frequency, []).append(o)
            for f, group in sorted(by_freq.items()):
                values = np.column_stack([o.d[tag] for o in group]).tolist()
                path = out / f"matrix_{tag}_{f}.csv"
                files.append(write_csv(path, ["date", *(o.name for o in group)],
                                       ([d, *row] for d, row in zip(series[f].dates, values))))
            dates = series[good[0][0].frequency].dates
            if len(by_freq) > 1 and all(series[f].dates == dates for f in by_freq):
                values = np.column_stack([o.d[tag] for _, o in good]).tolist()
                files.append(write_csv(out / f"matrix_{tag}.csv", ["date", *(o.name for _, o in good)],
                                       ([d, *row] for d, row in zip(dates, values))))
            ranked = sorted(good, key=lambda so: (-so[1].reports[tag].AR, so[1].name))[: config.top_n]
            top = [o.name for _, o in ranked]
            dates = series[ranked[0][0].frequency].dates
            if all(series[s.frequency].dates == dates for s, _ in ranked):
                curves = np.column_stack([o.equity[tag] for _, o in ranked]).tolist()
                files.append(write_csv(out / f"equity_{tag}.csv", ["date", *top],
                                       ([d, *row] for d, row in zip(dates, curves))))
            files.append(write_svg(out / f"equity_{tag}.svg",
                                   {o.name: o.equity[tag] for _, o in ranked}, f"Equity, top {len(top)} by AR ({tag})"))
        pool = [o.name for s, o in good if o.reports[tag].SR is not None and o.reports[tag].SR > config.pool_threshold]
        summary["cost_modes"][tag] = {"top": top, "pool": pool}
        if config.selector and pool:
            files += _selection_outputs(_pool_matrix(good, tag, series, pool), out, tag)
    files.append(write_json(out / "summary.json", {**summary, "files": [p.name for p in files]}))
    return GridResult(outcomes, files, errors)


def _pool_matrix(good, tag, series, pool) -> PerformanceMatrix | None:
    """Pool members share a date axis only when all run on the same trading days."""
    members = [(s, o) for s, o in good if o.name in set(pool)]
    dates = series[members[0][0].frequency].dates
    if any(series[s.frequency].dates != dates for s, _ in members) or len(dates) < 10:
        return None
    return PerformanceMatrix(np.column_stack([o.d[tag] for _, o in members]), tuple(o.name for _, o in members),
                             tuple(dates))


def _selection_outputs(pool: PerformanceMatrix | None, out: Path, tag: str) -> list[Path]:
    if pool is None:
        return []
    rows, picks = [], {}
    for plan in enumerate_window_plans():
        if pool.T < plan.train + plan.test:
            continue
        res = rolling_select(pool, plan)
        s = res.summary()
        rows.append([s["Train"], s["Test"], s["AR"], s["MDP"], s["AR/MDP"], s["SR"]])
        picks[f"{plan.train}/{plan.test}"] = [
            {"start": pool.dates[d.start], "stop": pool.dates[d.stop - 1], "strategy": d.strategy} for d in res.chosen
        ]
    suffix = f"_{tag}" if tag else ""
    return [
        write_csv(out / f"table7{suffix}.csv", ["Train", "Test", "AR", "MDP", "AR/MDP", "SR"], rows),
        write_json(out / f"selection{suffix}.json", picks),
    ]


def run_select(matrix: PerformanceMatrix, pool_ids: Sequence[str] | None, out_dir: str | Path) -> list[Path]:
    """Rolling-selection table for every window plan that fits the data."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pool = matrix.select(list(pool_ids)) if pool_ids else matrix
    return _selection_outputs(pool, out, "")


def read_pool(path: str | Path) -> list[str]:
    """Strategy ids, one per line; blank lines and ``#`` comments are skipped."""
    ids = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            ids.append(line)
    if not ids:
        raise ValueError(f"{path}: empty pool")
    return ids


def pool_from_reports(path: str | Path, threshold: float = SHARPE_THRESHOLD) -> list[str]:
    import csv

    with open(path, newline="") as fh:
        return [r["strategy"] for r in csv.DictReader(fh) if r["SR"] and float(r["SR"]) > threshold]


def _family_of(sid: str) -> tuple[str, int | None]:
    try:
        spec = StrategySpec.from_name(sid)
    except ValueError:
        return "Other", None
    return FAMILY_LABEL[spec.family], spec.frequency


def snooping_tables(matrix: PerformanceMatrix, alphas: Sequence[float], B: int, Q: float, seed: int,
                    omega: str = "nw"):
    """SPA and Step-SPA at each alpha from one shared bootstrap plan."""
    plan = BootstrapPlan.build(matrix.T, B, Q, seed)
    results = {}
    counts: dict[tuple[str, int | None, float], int] = {}
    for a in alphas:
        spa = spa_test(matrix, plan, a, omega)
        step = step_spa(matrix, plan, a, omega)
        results[repr(a)] = {
            "reject": spa.reject,
            "q_star": spa.q_star,
            "max_tstat": spa.max_tstat,
            "pvalue": spa.pvalue,
            "significant": list(step.significant),
            "step_critical_values": list(step.critical_values),
            "excluded": list(spa.excluded),
        }
        for sid in step.significant:
            key = (*_family_of(sid), a)
            counts[key] = counts.get(key, 0) + 1
    families = [FAMILY_LABEL[f] for f in FAMILIES]
    seen = {_family_of(s) for s in matrix.ids}
    if any(f == "Other" for f, _ in seen):
        families.append("Other")
    freqs = sorted({f for _, f in seen if f is not None}) or [None]
    header = ["family", *(f"{f}s@{a!r}" if f is not None else f"all@{a!r}" for f in freqs for a in alphas)]
    rows = [[fam, *(counts.get((fam, f, a), 0) for f in freqs for a in alphas)] for fam in families]
    rows.append(["Total", *(sum(counts.get((fam, f, a), 0) for fam in families) for f in freqs for a in alphas)])
    return results, header, rows


def adf_table(y: np.ndarray, lags: Sequence[int], variant: str, alpha: float) -> tuple[list[str], list[list]]:
    """Columns per lag in one common sample; rows coeff/tStats per regressor then fit statistics."""
    skip = max(lags) + 1
    fits = [adf_test(y, p, variant, alpha, skip=skip) for p in lags]
    width = max(lags) + 1
    names = ["phi", *(f"beta{i}" for i in range(1, width))]
    header = ["stat", *(f"lags={p}" for p in lags)]
    rows = []
    cols = [f.table_column() for f in fits]
    for i, nm in enumerate(names):
        rows.append([f"coeff[{nm}]", *(c["coeff"][i] if i < len(c["coeff"]) else None for c in cols)])
    for i, nm in enumerate(names):
        rows.append([f"tStats[{nm}]", *(c["tStats"][i] if i < len(c["tStats"]) else None for c in cols)])
    for key in ("FStat", "AIC", "BIC", "p-value", "H"):
        rows.append([key, *(c[key] for c in cols)])
    return header, rows


def _defined(x: np.ndarray) -> np.ndarray:
    return x[np.isfinite(x)]


def stationarity_series(series: BarSeries) -> dict[str, np.ndarray]:
    """Log returns and the three stationary indicators at representative settings."""
    p, ds = series.prices, series.day_starts
    K, _, _ = zip(*[ind.kdj(p[a:b], 9, 3, 3) for a, b in zip(ds, np.r_[ds[1:], len(p)])])
    return {
        "logret": log_returns(series).values,
        "R_5_60": _defined(ind.per_day(ind.sma_ratio, p, ds, 5, 60).values),
        "K_9_3_3": _defined(np.concatenate([k.values for k in K])),
        "SBoll_60": _defined(ind.per_day(ind.sboll, p, ds, 60).values),
    }


def run_tests(config: RunConfig, matrix: PerformanceMatrix | str | Path, out_dir: str | Path | None = None,
              with_adf: bool = True) -> list[Path]:
    out = Path(out_dir) if out_dir is not None else config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    if not isinstance(matrix, PerformanceMatrix):
        matrix = read_matrix(matrix)
    results, header, rows = snooping_tables(matrix, config.alphas, config.B, config.Q, config.seed, config.omega)
    meta = {"B": config.B, "Q": config.Q, "seed": config.seed, "omega": config.omega}
    files = [
        write_json(out / "spa.json", {**meta, "alphas": results}),
        write_csv(out / "table5.csv", header, rows),
    ]
    adf_summary = {}
    if with_adf and config.data:
        alpha = min(config.alphas)
        for f, s in load_series(config, config.frequencies).items():
            for name, y in stationarity_series(s).items():
                try:
                    h, r = adf_table(y, config.adf_lags, config.adf_variant, alpha)
                except AdfError as exc:
                    adf_summary[f"{name}_{f}"] = {"error": str(exc)}
                    continue
                files.append(write_csv(out / f"adf_{name}_{f}.csv", h, r))
                adf_summary[f"{name}_{f}"] = {"H": r[-1][1:], "p-value": r[-2][1:]}
        files.append(write_json(out / "adf.json", adf_summary))
    return files
