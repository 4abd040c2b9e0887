"""Classical and stationary technical indicators.

Every function takes a 1-D price array and returns :class:`IndicatorSeries`
values aligned with it, NaN during warm-up.  Callers that want per-day
windows apply them to one trading day at a time (see :func:`per_day`).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import lfilter

#: RSV assigned when the rolling high equals the rolling low.
FLAT_RSV = 50.0
#: %K and %D value assumed on the bar before the first defined RSV.
KDJ_SEED = 50.0
#: SBoll is 0 when sigma falls below this fraction of the EMA level.
SIGMA_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class IndicatorSeries:
    values: np.ndarray
    warmup: int

    def __len__(self) -> int:
        return len(self.values)

    @property
    def defined(self) -> np.ndarray:
        return np.arange(len(self.values)) >= self.warmup


def _prices(prices) -> np.ndarray:
    p = np.asarray(prices, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("prices must be 1-D")
    return p


def _check_window(name: str, n: int, lo: int = 1) -> None:
    if int(n) != n or n < lo:
        raise ValueError(f"{name} must be an integer >= {lo}, got {n!r}")


def _windowed(p: np.ndarray, n: int, reducer: Callable[[np.ndarray], np.ndarray]) -> IndicatorSeries:
    out = np.full(len(p), np.nan)
    if len(p) >= n:
        out[n - 1:] = reducer(sliding_window_view(p, n))
    return IndicatorSeries(out, n - 1)


def ma(prices, n: int) -> IndicatorSeries:
    """Simple n-period moving average."""
    _check_window("n", n)
    return _windowed(_prices(prices), n, lambda w: w.mean(axis=1))


def ema(prices, n: int) -> IndicatorSeries:
    """Linearly weighted average with weights n, n-1, ..., 1 (newest first)."""
    _check_window("n", n)
    weights = np.arange(1, n + 1, dtype=np.float64)
    weights /= weights.sum()
    return _windowed(_prices(prices), n, lambda w: w @ weights)


def sma(prices, n: int) -> IndicatorSeries:
    """MA(n)_t / P_t, a function of log-return differences only."""
    p = _prices(prices)
    m = ma(p, n)
    return IndicatorSeries(m.values / p, m.warmup)


def sma_ratio(prices, n_s: int, n_l: int) -> IndicatorSeries:
    """R = MA(n_s) / MA(n_l)."""
    _check_window("n_s", n_s)
    _check_window("n_l", n_l)
    if n_s >= n_l:
        raise ValueError(f"need n_s < n_l, got {n_s} >= {n_l}")
    p = _prices(prices)
    return IndicatorSeries(ma(p, n_s).values / ma(p, n_l).values, n_l - 1)


def rsv(prices, n: int) -> IndicatorSeries:
    _check_window("n", n)
    p = _prices(prices)
    out = np.full(len(p), np.nan)
    if len(p) >= n:
        win = sliding_window_view(p, n)
        lo, hi = win.min(axis=1), win.max(axis=1)
        span = hi - lo
        cur = p[n - 1:]
        with np.errstate(invalid="ignore", divide="ignore"):
            out[n - 1:] = np.where(span > 0, 100.0 * (cur - lo) / span, FLAT_RSV)
    return IndicatorSeries(out, n - 1)


def _recursive_smooth(x: np.ndarray, start: int, span: int, seed: float) -> np.ndarray:
    # decay (span-1)/(span+1), gain 2/(span+1): an EMA of the given span
    decay = (span - 1) / (span + 1)
    gain = 2.0 / (span + 1)
    out = np.full(len(x), np.nan)
    if start < len(x):
        out[start:], _ = lfilter([gain], [1.0, -decay], x[start:], zi=[decay * seed])
    return out


def kdj(prices, n: int, m: int, k: int) -> tuple[IndicatorSeries, IndicatorSeries, IndicatorSeries]:
    """Stochastic oscillator lines (%K, %D, %J).

    RSV over an n-bar high/low range, %K its recursive smoothing with span m,
    %D the smoothing of %K with span k, and %J = 3%K - 2%D.  Both recursions
    start from 50 on the bar before the first defined RSV.
    """
    _check_window("n", n)
    _check_window("m", m)
    _check_window("k", k)
    r = rsv(prices, n)
    w = r.warmup
    K = _recursive_smooth(r.values, w, m, KDJ_SEED)
    D = _recursive_smooth(K, w, k, KDJ_SEED)
    J = 3.0 * K - 2.0 * D
    return IndicatorSeries(K, w), IndicatorSeries(D, w), IndicatorSeries(J, w)


def bollinger(prices, n: int, K: float, ddof: int = 0) -> tuple[IndicatorSeries, IndicatorSeries, IndicatorSeries]:
    """Classical bands (mid, upper, lower) around the weighted EMA.

    ``ddof=0`` gives the 1/n dispersion of the classical definition.
    """
    _check_window("n", n, lo=2)
    p = _prices(prices)
    mid = ema(p, n)
    sig = _sigma(p, n, mid.values, ddof)
    return (
        mid,
        IndicatorSeries(mid.values + K * sig, n - 1),
        IndicatorSeries(mid.values - K * sig, n - 1),
    )


def _sigma(p: np.ndarray, n: int, centre: np.ndarray, ddof: int) -> np.ndarray:
    out = np.full(len(p), np.nan)
    if len(p) >= n:
        dev = sliding_window_view(p, n) - centre[n - 1:, None]
        out[n - 1:] = np.sqrt((dev * dev).sum(axis=1) / (n - ddof))
    return out


def sboll(prices, n: int) -> IndicatorSeries:
    """Stationary Bollinger z-score (P_t - EMA_t) / sigma_t, sigma with divisor n - 1."""
    _check_window("n", n, lo=2)
    p = _prices(prices)
    mid = ema(p, n).values
    sig = _sigma(p, n, mid, ddof=1)
    out = np.full(len(p), np.nan)
    d = slice(n - 1, None)
    flat = sig[d] <= SIGMA_FLOOR * np.abs(mid[d])
    with np.errstate(invalid="ignore", divide="ignore"):
        out[d] = np.where(flat, 0.0, (p[d] - mid[d]) / sig[d])
    return IndicatorSeries(out, n - 1)


def per_day(func: Callable[..., IndicatorSeries], prices, day_starts: Sequence[int], *args) -> IndicatorSeries:
    """Apply ``func`` independently to each trading day and concatenate.

    The returned warm-up is that of a single day; values before each day's
    warm-up are NaN.
    """
    p = _prices(prices)
    bounds = list(day_starts) + [len(p)]
    out = np.full(len(p), np.nan)
    warm = 0
    for a, b in zip(bounds, bounds[1:]):
        s = func(p[a:b], *args)
        out[a:b] = s.values
        warm = s.warmup
    return IndicatorSeries(out, warm)
