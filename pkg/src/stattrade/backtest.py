"""Cost-adjusted log-return accumulation and the currency trade ledger.

Per bar n of a day the strategy earns ``I_n * (p_{n+1} - p_n)`` and pays
``ln((1 - c) / (1 + c)) * |I_{n+1} - I_n|``.  Every day starts flat, so the
first bar's position change from 0 is charged as well.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .ingest import BarSeries
from .strategy import PositionSeries

BASIS = 1e-4  # one ten-thousandth


class BacktestError(ValueError):
    pass


@dataclass(frozen=True)
class CostSchedule:
    """Effective-dated unilateral cost rates (fraction of notional)."""

    entries: tuple[tuple[date, float], ...]

    def __post_init__(self):
        if not self.entries:
            raise BacktestError("cost schedule is empty")
        dates = [d for d, _ in self.entries]
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise BacktestError("cost schedule dates must be strictly increasing")
        if any(not (0 <= r < 1) for _, r in self.entries):
            raise BacktestError("cost rates must lie in [0, 1)")

    @classmethod
    def default(cls) -> "CostSchedule":
        """CFFEX index-futures fees, 2012-01-04 onwards."""
        return cls(
            (
                (date(2012, 1, 4), 0.5 * BASIS),
                (date(2012, 6, 1), 0.35 * BASIS),
                (date(2012, 9, 1), 0.25 * BASIS),
                (date(2015, 8, 3), 0.23 * BASIS),
                (date(2015, 8, 26), 1.15 * BASIS),
                (date(2015, 9, 7), 23 * BASIS),
            )
        )

    @classmethod
    def flat(cls, rate: float, start: date = date(1900, 1, 1)) -> "CostSchedule":
        return cls(((start, rate),))

    def lookup(self, day: date) -> float:
        i = bisect_right([d for d, _ in self.entries], day) - 1
        if i < 0:
            raise BacktestError(f"no cost rate effective on {day}")
        return self.entries[i][1]


@dataclass(frozen=True)
class BacktestConfig:
    capital: float = 1_000_000.0
    multiplier: float = 300.0
    costs: CostSchedule = field(default_factory=CostSchedule.default)
    include_costs: bool = True

    def __post_init__(self):
        if not self.capital > 0:
            raise BacktestError("capital must be positive")
        if not self.multiplier > 0:
            raise BacktestError("multiplier must be positive")

    def rate(self, day: date) -> float:
        return self.costs.lookup(day) if self.include_costs else 0.0


@dataclass(frozen=True)
class DailyPerformance:
    strategy: str
    date: date
    d: float  # cost-adjusted log return
    pnl: float = 0.0  # currency P&L of trades closed that day
    trades: int = 0


@dataclass(frozen=True)
class Trade:
    side: int
    open_time: np.datetime64
    close_time: np.datetime64
    open_price: float
    close_price: float
    pnl: float
    cost: float
    log_return: float


@dataclass(frozen=True, eq=False)
class TradeLedger:
    """Columnar round-trip records; index i of every array is trade i."""

    side: np.ndarray
    open_index: np.ndarray
    close_index: np.ndarray
    open_time: np.ndarray
    close_time: np.ndarray
    open_price: np.ndarray
    close_price: np.ndarray
    cost: np.ndarray  # currency, both sides
    pnl: np.ndarray  # currency, net of cost
    log_return: np.ndarray  # side * (ln close - ln open), before costs
    day: np.ndarray  # trading-day index of the close

    def __len__(self) -> int:
        return len(self.side)

    @property
    def long_count(self) -> int:
        return int(np.count_nonzero(self.side == 1))

    @property
    def short_count(self) -> int:
        return int(np.count_nonzero(self.side == -1))

    @property
    def trades(self) -> list[Trade]:
        return [
            Trade(int(s), ot, ct, float(op), float(cp), float(p), float(c), float(lr))
            for s, ot, ct, op, cp, p, c, lr in zip(
                self.side, self.open_time, self.close_time, self.open_price,
                self.close_price, self.pnl, self.cost, self.log_return,
            )
        ]


@dataclass(frozen=True, eq=False)
class EquityCurve:
    dates: list[date]
    currency: np.ndarray  # capital + cumulative ledger P&L
    log: np.ndarray  # capital * exp(cumulative d)

    def rows(self) -> list[tuple[date, float, float]]:
        return list(zip(self.dates, self.currency.tolist(), self.log.tolist()))


def log_cost(c: float) -> float:
    """ln((1 - c) / (1 + c)), the log cost of one unit of position change."""
    if not 0 <= c < 1:
        raise BacktestError(f"cost rate must lie in [0, 1), got {c}")
    return math.log((1.0 - c) / (1.0 + c))


def cost_for_transition(i_prev: int, i_next: int, c: float) -> float:
    if i_prev not in (-1, 0, 1) or i_next not in (-1, 0, 1):
        raise BacktestError("positions must be -1, 0 or 1")
    return log_cost(c) * abs(i_next - i_prev)


def _position_changes(pos: np.ndarray, day_starts: np.ndarray) -> np.ndarray:
    prev = np.empty_like(pos)
    prev[0] = 0
    prev[1:] = pos[:-1]
    prev[day_starts] = 0
    return prev


def run_backtest(
    series: BarSeries, positions: PositionSeries, config: BacktestConfig | None = None, strategy: str = ""
) -> tuple[list[DailyPerformance], TradeLedger]:
    """Daily cost-adjusted log returns plus the round-trip ledger."""
    config = config or BacktestConfig()
    pos = np.asarray(positions.positions, dtype=np.int64)
    if len(pos) != len(series):
        raise BacktestError(f"positions ({len(pos)}) and bars ({len(series)}) are misaligned")
    ds = series.day_starts
    if len(positions.day_starts) != len(ds) or np.any(positions.day_starts != ds):
        raise BacktestError("position day boundaries differ from the series")
    if np.any(np.abs(pos) > 1):
        raise BacktestError("positions must be -1, 0 or 1")
    day_end = np.r_[ds[1:] - 1, len(pos) - 1]
    if np.any(pos[day_end] != 0):
        raise BacktestError("positions must be flat on the last bar of every day")

    logp = np.log(series.prices)
    n_days = len(ds)
    day_of_bar = np.repeat(np.arange(n_days), np.diff(np.r_[ds, len(pos)]))
    dates = series.dates
    rates = np.array([config.rate(d) for d in dates])
    lc = np.array([log_cost(c) for c in rates])

    step = np.zeros(len(pos))
    step[:-1] = pos[:-1] * np.diff(logp)
    step[day_end] = 0.0
    prev = _position_changes(pos, ds)
    moves = np.abs(pos - prev)
    gross = np.bincount(day_of_bar, weights=step, minlength=n_days)
    charges = np.bincount(day_of_bar, weights=moves, minlength=n_days)
    d = gross + lc * charges

    ch = np.flatnonzero(moves)
    open_idx = ch[pos[ch] != 0]
    close_idx = ch[prev[ch] != 0]
    if len(open_idx) != len(close_idx):
        raise BacktestError("unbalanced trades")
    side = pos[open_idx]
    po, pc = series.prices[open_idx], series.prices[close_idx]
    tday = day_of_bar[close_idx]
    cost = rates[tday] * (po + pc) * config.multiplier
    pnl = side * (pc - po) * config.multiplier - cost
    ledger = TradeLedger(
        side=side.astype(np.int8),
        open_index=open_idx,
        close_index=close_idx,
        open_time=series.timestamps[open_idx],
        close_time=series.timestamps[close_idx],
        open_price=po,
        close_price=pc,
        cost=cost,
        pnl=pnl,
        log_return=side * (logp[close_idx] - logp[open_idx]),
        day=tday,
    )
    day_pnl = np.bincount(tday, weights=pnl, minlength=n_days)
    day_trades = np.bincount(tday, minlength=n_days)
    daily = [
        DailyPerformance(strategy, dt, float(x), float(p), int(k))
        for dt, x, p, k in zip(dates, d, day_pnl, day_trades)
    ]
    return daily, ledger


def cost_charges(positions: PositionSeries) -> int:
    """Total units of position change, sum |I_{n+1} - I_n| with flat day starts."""
    pos = np.asarray(positions.positions, dtype=np.int64)
    return int(np.abs(pos - _position_changes(pos, positions.day_starts)).sum())


def equity_curve(daily: list[DailyPerformance], config: BacktestConfig | None = None) -> EquityCurve:
    config = config or BacktestConfig()
    dates = [x.date for x in daily]
    if any(b < a for a, b in zip(dates, dates[1:])):
        raise BacktestError("daily performance must be sorted by date")
    pnl = np.array([x.pnl for x in daily], dtype=np.float64)
    d = np.array([x.d for x in daily], dtype=np.float64)
    return EquityCurve(dates, config.capital + np.cumsum(pnl), config.capital * np.exp(np.cumsum(d)))
