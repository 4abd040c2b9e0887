"""Synthetic data: GBM intraday bars and planted-signal performance matrices."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .ingest import BarSeries, SessionCalendar, build_series
from .metrics import TRADING_DAYS
from .snooping import PerformanceMatrix


def business_days(start: date, count: int) -> list[date]:
    out, d = [], start
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


@dataclass(frozen=True)
class GbmSpec:
    p0: float = 3000.0
    sigma: float = 0.25  # annualised
    r: float = 0.0  # annualised drift
    frequency: int = 15
    days: int = 20
    seed: int = 0
    start: date = date(2016, 1, 4)
    calendar: SessionCalendar = field(default_factory=SessionCalendar.default)

    def __post_init__(self):
        if not self.p0 > 0:
            raise ValueError("p0 must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.days < 1:
            raise ValueError("need at least one day")
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")


def bar_grid(day: date, frequency: int, calendar: SessionCalendar) -> np.ndarray:
    """Bar-end seconds after midnight for a gapless day."""
    return np.concatenate(
        [np.arange(o + frequency, c + 1, frequency) for o, c in calendar.window_seconds(day)]
    )


def gbm_series(spec: GbmSpec) -> BarSeries:
    """Bars with log increments sigma*dB + (r - sigma^2/2)*dt.

    One bar spans dt = frequency / (250 * session seconds of its day) years.
    """
    days = business_days(spec.start, spec.days)
    stamps, dts = [], []
    for d in days:
        sec = bar_grid(d, spec.frequency, spec.calendar)
        stamps.append(np.datetime64(d, "s") + sec.astype("timedelta64[s]"))
        dts.append(np.full(len(sec), spec.frequency / (TRADING_DAYS * spec.calendar.session_seconds(d))))
    ts = np.concatenate(stamps)
    dt = np.concatenate(dts)
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal(len(ts))
    inc = spec.sigma * np.sqrt(dt) * z + (spec.r - 0.5 * spec.sigma**2) * dt
    inc[0] = 0.0
    prices = spec.p0 * np.exp(np.cumsum(inc))
    return build_series(ts, prices, frequency=spec.frequency, calendar=spec.calendar)


def planted_matrix(
    K: int,
    T: int,
    effect: float = 0.0,
    seed: int = 0,
    column: int = 0,
    sigma: float = 1.0,
    start: date = date(2016, 1, 4),
) -> PerformanceMatrix:
    """i.i.d. N(0, sigma^2) daily performance with ``effect`` added to one column."""
    if K < 2 or T < 10:
        raise ValueError("need K >= 2 and T >= 10")
    if not 0 <= column < K:
        raise ValueError("planted column out of range")
    rng = np.random.default_rng(seed)
    values = sigma * rng.standard_normal((T, K))
    values[:, column] += effect
    width = len(str(K - 1))
    ids = tuple(f"S{j:0{width}d}" for j in range(K))
    return PerformanceMatrix(values, ids, tuple(business_days(start, T)))
