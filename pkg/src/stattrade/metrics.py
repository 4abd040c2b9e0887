"""Performance and risk measures for one strategy.

Degenerate cases (zero variance, no losing day, zero drawdown) yield ``None``
instead of NaN or infinities so that reports never carry non-finite numbers.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .backtest import BacktestConfig, DailyPerformance, TradeLedger, equity_curve

TRADING_DAYS = 250

#: Report column order, matching the appendix tables.
REPORT_COLUMNS = ("LTN", "STN", "ASP", "ADP", "AR", "MDP", "AR/MDP", "SR", "PnL", "WR", "AP/AL")


def annual_return(total_pnl: float, n_days: int, capital: float) -> float:
    """(total P&L / capital) * 250 / n_days."""
    if n_days < 1:
        raise ValueError("annual return needs at least one day")
    if not capital > 0:
        raise ValueError("capital must be positive")
    return float(total_pnl) / capital * TRADING_DAYS / n_days


def pnl_index(trade_profit: float, trade_loss: float) -> float:
    """100 * (profit - loss) / max(profit, loss); ``loss`` is a magnitude."""
    if trade_profit < 0 or trade_loss < 0:
        raise ValueError("profit and loss sums are magnitudes (>= 0)")
    top = max(trade_profit, trade_loss)
    if top == 0:
        return 0.0
    return 100.0 * (trade_profit - trade_loss) / top


def sharpe(daily_returns: Sequence[float]) -> float | None:
    """Annualised Sharpe ratio, daily mean / sample std * sqrt(250), risk-free 0.

    Returns None when the standard deviation is zero.
    """
    d = np.asarray(daily_returns, dtype=np.float64)
    if len(d) < 2:
        raise ValueError("Sharpe ratio needs at least two days")
    sd = d.std(ddof=1)
    if sd == 0 or sd <= 1e-12 * float(np.abs(d).mean()):
        return None
    return float(d.mean() / sd * math.sqrt(TRADING_DAYS))


def max_drawdown_pct(equity: Sequence[float], allow_negative: bool = False) -> float:
    """max_i 1 - V_i / W_i with W the running peak.

    With ``allow_negative`` an equity that falls through zero (losses above
    capital) is accepted and the result may exceed 1; the first value must
    still be positive.
    """
    v = np.asarray(equity, dtype=np.float64)
    if len(v) == 0:
        return 0.0
    if (np.any(v <= 0) and not allow_negative) or v[0] <= 0:
        raise ValueError("equity values must be positive")
    peak = np.maximum.accumulate(v)
    return float(np.max(1.0 - v / peak))


def win_rate(trade_pnl: Sequence[float]) -> float | None:
    p = np.asarray(trade_pnl, dtype=np.float64)
    if len(p) == 0:
        return None
    return float(np.count_nonzero(p > 0) / len(p))


def ap_over_al(daily_pnl: Sequence[float]) -> float | None:
    """Mean profit of winning days over mean loss magnitude of losing days."""
    p = np.asarray(daily_pnl, dtype=np.float64)
    wins, losses = p[p > 0], p[p < 0]
    if len(losses) == 0:
        return None
    if len(wins) == 0:
        return 0.0
    return float(wins.mean() / -losses.mean())


def ratio(ar: float, mdp: float) -> float | None:
    return None if mdp <= 0 else ar / mdp


@dataclass(frozen=True)
class BacktestReport:
    strategy: str
    LTN: int
    STN: int
    ASP: float | None
    ADP: float
    AR: float
    MDP: float
    AR_MDP: float | None
    SR: float | None
    PnL: float
    WR: float | None
    AP_AL: float | None
    days: int = 0

    def row(self) -> dict:
        """Values keyed by the report column names."""
        r = asdict(self)
        return {
            "LTN": r["LTN"], "STN": r["STN"], "ASP": r["ASP"], "ADP": r["ADP"], "AR": r["AR"],
            "MDP": r["MDP"], "AR/MDP": r["AR_MDP"], "SR": r["SR"], "PnL": r["PnL"],
            "WR": r["WR"], "AP/AL": r["AP_AL"],
        }


def report(
    daily: Sequence[DailyPerformance], ledger: TradeLedger, config: BacktestConfig | None = None, strategy: str = ""
) -> BacktestReport:
    config = config or BacktestConfig()
    n_days = len(daily)
    total = float(np.sum(ledger.pnl))
    n_trades = len(ledger)
    ar = annual_return(total, n_days, config.capital)
    curve = equity_curve(list(daily), config)
    mdp = max_drawdown_pct(np.r_[config.capital, curve.currency], allow_negative=True)
    profit = float(ledger.pnl[ledger.pnl > 0].sum())
    loss = float(-ledger.pnl[ledger.pnl < 0].sum())
    d = [x.d for x in daily]
    return BacktestReport(
        strategy=strategy or (daily[0].strategy if daily else ""),
        LTN=ledger.long_count,
        STN=ledger.short_count,
        ASP=total / n_trades if n_trades else None,
        ADP=total / n_days,
        AR=ar,
        MDP=mdp,
        AR_MDP=ratio(ar, mdp),
        SR=sharpe(d) if n_days >= 2 else None,
        PnL=pnl_index(profit, loss),
        WR=win_rate(ledger.pnl),
        AP_AL=ap_over_al([x.pnl for x in daily]),
        days=n_days,
    )


def log_mode_summary(d: Sequence[float], n_days: int | None = None) -> dict:
    """AR, MDP, AR/MDP and SR of a daily log-return path on unit capital."""
    x = np.asarray(d, dtype=np.float64)
    n = n_days if n_days is not None else len(x)
    ar = annual_return(float(x.sum()), n, 1.0)
    mdp = max_drawdown_pct(np.exp(np.r_[0.0, np.cumsum(x)]))
    return {"AR": ar, "MDP": mdp, "AR/MDP": ratio(ar, mdp), "SR": sharpe(x) if len(x) >= 2 else None}
