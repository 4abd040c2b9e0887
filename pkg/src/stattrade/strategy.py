"""Trading-rule blocks, the one-unit position machine, and the strategy grid."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from . import indicators as ind
from .ingest import BarSeries

FAMILIES = ("MA", "KDJ", "BOLL")
FREQUENCIES = (15, 30, 60)

MA_SHORT = (1, 5, 10, 15)
MA_LONG = (20, 30, 60, 120)
MA_BAND = (0.0001, 0.0005, 0.001, 0.0015)
KDJ_PARAMS = ((5, 1, 3), (5, 3, 3), (9, 3, 3), (14, 3, 3), (19, 3, 3))
BOLL_WINDOW = (20, 30, 60, 120)
BOLL_K = (0.1, 0.5, 1.0, 1.5, 2.0, 2.5)

_LABEL = {"MA": "MA", "KDJ": "KDJ", "BOLL": "Boll"}
_NAME_RE = re.compile(r"^(MA|KDJR?|Boll|BOLL)_(\d+)\(([^)]*)\)$")


def _fmt(x) -> str:
    return f"{x:g}"


@dataclass(frozen=True)
class StrategySpec:
    """One grid cell.  ``params`` is (n_s, n_l, b), (n, m, k) or (n, K)."""

    family: str
    frequency: int
    params: tuple
    custom: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        p = self.params
        if self.family == "MA":
            n_s, n_l, b = p
            if not (1 <= n_s < n_l) or b < 0:
                raise ValueError(f"bad MA params {p}")
        elif self.family == "KDJ":
            if len(p) != 3 or min(p) < 1:
                raise ValueError(f"bad KDJ params {p}")
        elif len(p) != 2 or p[0] < 2 or p[1] <= 0:
            raise ValueError(f"bad BOLL params {p}")

    @property
    def name(self) -> str:
        return f"{_LABEL[self.family]}_{self.frequency}({','.join(_fmt(x) for x in self.params)})"

    def __str__(self) -> str:
        return self.name

    @classmethod
    def from_name(cls, name: str) -> "StrategySpec":
        m = _NAME_RE.match(name.strip())
        if m is None:
            raise ValueError(f"cannot parse strategy name {name!r}")
        family = {"MA": "MA", "KDJ": "KDJ", "KDJR": "KDJ", "Boll": "BOLL", "BOLL": "BOLL"}[m[1]]
        raw = [x.strip() for x in m[3].split(",")]
        if family == "MA":
            params = (int(raw[0]), int(raw[1]), float(raw[2]))
        elif family == "KDJ":
            params = tuple(int(x) for x in raw)
        else:
            params = (int(raw[0]), float(raw[1]))
        spec = cls(family, int(m[2]), params)
        grid = {s.name for s in enumerate_grid((spec.frequency,), (family,))}
        return spec if spec.name in grid else cls(family, spec.frequency, params, custom=True)


def enumerate_grid(
    frequencies: Sequence[int] = FREQUENCIES, families: Sequence[str] = FAMILIES
) -> list[StrategySpec]:
    """The 64 MA + 5 KDJ + 24 Bollinger cells per frequency, family-major."""
    out = []
    for fam in FAMILIES:
        if fam not in families:
            continue
        for f in frequencies:
            if fam == "MA":
                out += [StrategySpec("MA", f, (s, l, b)) for l, s, b in product(MA_LONG, MA_SHORT, MA_BAND)]
            elif fam == "KDJ":
                out += [StrategySpec("KDJ", f, p) for p in KDJ_PARAMS]
            else:
                out += [StrategySpec("BOLL", f, (n, K)) for n, K in product(BOLL_WINDOW, BOLL_K)]
    return out


@dataclass(frozen=True, eq=False)
class PositionSeries:
    """Per-bar target position in {-1, 0, +1}.

    ``events`` is the machine's audit log: ``(bar, action, before, after)``
    for every action that changed the position.
    """

    positions: np.ndarray
    day_starts: np.ndarray
    events: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def day_ends(self) -> np.ndarray:
        return np.r_[self.day_starts[1:] - 1, len(self.positions) - 1].astype(np.int64)


def _shifted(x: np.ndarray, day_starts: np.ndarray) -> np.ndarray:
    prev = np.empty_like(x)
    prev[0] = np.nan
    prev[1:] = x[:-1]
    prev[day_starts] = np.nan
    return prev


def _day_starts(n: int, day_starts) -> np.ndarray:
    if day_starts is None:
        return np.array([0], dtype=np.int64)
    ds = np.asarray(day_starts, dtype=np.int64)
    if len(ds) == 0 or ds[0] != 0 or np.any(np.diff(ds) <= 0) or ds[-1] >= max(n, 1):
        raise ValueError("day_starts must start at 0 and be strictly increasing within range")
    return ds


def run_machine(open_long, close_long, open_short, close_short, day_starts=None) -> PositionSeries:
    """Apply rule events bar by bar with one-unit positions.

    Closes are processed before opens; an open is ignored when that side is
    already held and reverses an opposite position.  The last bar of every day
    is forced flat.
    """
    ol, cl, os_, cs = (np.asarray(a, dtype=bool) for a in (open_long, close_long, open_short, close_short))
    n = len(ol)
    ds = _day_starts(n, day_starts)
    last = np.zeros(n, dtype=bool)
    last[np.r_[ds[1:] - 1, n - 1]] = True
    pos = np.zeros(n, dtype=np.int8)
    events = []
    state = 0
    mark = 0
    for t in np.flatnonzero(ol | cl | os_ | cs | last):
        pos[mark:t] = state
        mark = t
        before = state
        if state == 1 and cl[t]:
            state = 0
            events.append((int(t), "close_long", 1, 0))
        elif state == -1 and cs[t]:
            state = 0
            events.append((int(t), "close_short", -1, 0))
        if ol[t] and state != 1:
            events.append((int(t), "open_long", state, 1))
            state = 1
        elif os_[t] and state != -1:
            events.append((int(t), "open_short", state, -1))
            state = -1
        if last[t] and state != 0:
            events.append((int(t), "force_close", state, 0))
            state = 0
        if state != before or last[t]:
            pos[t] = state
            mark = t + 1
    pos[mark:] = state
    return PositionSeries(pos, ds, events)


def ma_signals(R, b: float, day_starts=None) -> PositionSeries:
    """Filter-band rules on the SMA ratio R around 1 +/- b."""
    r = np.asarray(getattr(R, "values", R), dtype=np.float64)
    ds = _day_starts(len(r), day_starts)
    prev = _shifted(r, ds)
    up, lo = 1.0 + b, 1.0 - b
    return run_machine(
        (prev <= up) & (r > up),
        (prev > up) & (r <= up),
        (prev >= lo) & (r < lo),
        (prev < lo) & (r >= lo),
        ds,
    )


def classical_ma_signals(short_ma, long_ma, band: float, day_starts=None) -> PositionSeries:
    """Classical rules on MA(n_s) - MA(n_l) with up-band ``band`` and low-band ``-band``."""
    x = np.asarray(getattr(short_ma, "values", short_ma), dtype=np.float64) - np.asarray(
        getattr(long_ma, "values", long_ma), dtype=np.float64
    )
    ds = _day_starts(len(x), day_starts)
    prev = _shifted(x, ds)
    up, lo = band, -band
    return run_machine(
        (prev <= up) & (x > up),
        (prev > up) & (x <= up),
        (prev > lo) & (x <= lo),
        (prev <= lo) & (x > lo),
        ds,
    )


def kdj_signals(K, D, day_starts=None, low: float = 20.0, high: float = 80.0) -> PositionSeries:
    """%K / %D cross rules; opens only when low <= %K <= high."""
    k = np.asarray(getattr(K, "values", K), dtype=np.float64)
    d = np.asarray(getattr(D, "values", D), dtype=np.float64)
    ds = _day_starts(len(k), day_starts)
    kp, dp = _shifted(k, ds), _shifted(d, ds)
    up_cross = (kp < dp) & (k >= d)
    down_cross = (kp > dp) & (k <= d)
    band = (k >= low) & (k <= high)
    return run_machine(up_cross & band, down_cross, down_cross & band, up_cross, ds)


def boll_signals(S, K: float, day_starts=None) -> PositionSeries:
    """Breakout rules on the stationary Bollinger score with bands +/- K."""
    s = np.asarray(getattr(S, "values", S), dtype=np.float64)
    ds = _day_starts(len(s), day_starts)
    prev = _shifted(s, ds)
    return run_machine(
        (prev <= K) & (s > K),
        (prev >= K) & (s < K),
        (prev >= -K) & (s < -K),
        (prev <= -K) & (s > -K),
        ds,
    )


def indicator_series(spec: StrategySpec, series: BarSeries, cross_day_windows: bool = False):
    """Indicator(s) driving ``spec`` on ``series`` (per-day windows by default)."""
    p = series.prices
    starts = [0] if cross_day_windows else series.day_starts
    if spec.family == "MA":
        n_s, n_l, _ = spec.params
        return ind.per_day(ind.sma_ratio, p, starts, n_s, n_l)
    if spec.family == "BOLL":
        return ind.per_day(ind.sboll, p, starts, spec.params[0])
    bounds = list(starts) + [len(p)]
    K = np.full(len(p), np.nan)
    D = np.full(len(p), np.nan)
    for a, b in zip(bounds, bounds[1:]):
        k_, d_, _ = ind.kdj(p[a:b], *spec.params)
        K[a:b], D[a:b] = k_.values, d_.values
    w = spec.params[0] - 1
    return ind.IndicatorSeries(K, w), ind.IndicatorSeries(D, w)


def positions_for(spec: StrategySpec, series: BarSeries, cross_day_windows: bool = False) -> PositionSeries:
    if series.frequency != spec.frequency:
        raise ValueError(f"{spec.name} needs {spec.frequency}s bars, got {series.frequency}s")
    x = indicator_series(spec, series, cross_day_windows)
    ds = series.day_starts
    if spec.family == "MA":
        return ma_signals(x, spec.params[2], ds)
    if spec.family == "BOLL":
        return boll_signals(x, spec.params[1], ds)
    return kdj_signals(x[0], x[1], ds)
