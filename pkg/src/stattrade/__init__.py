"""Stationary-indicator intraday strategies for index futures, with data-snooping control."""
from .backtest import BacktestConfig, CostSchedule, run_backtest
from .ingest import BarSeries, SessionCalendar, parse_bars, resample
from .metrics import BacktestReport, report
from .snooping import BootstrapPlan, PerformanceMatrix, spa_test, step_spa
from .stattests import adf_test
from .strategy import StrategySpec, enumerate_grid, positions_for

__version__ = "0.1.0"

__all__ = [
    "BacktestConfig", "CostSchedule", "run_backtest", "BarSeries", "SessionCalendar", "parse_bars",
    "resample", "BacktestReport", "report", "BootstrapPlan", "PerformanceMatrix", "spa_test",
    "step_spa", "adf_test", "StrategySpec", "enumerate_grid", "positions_for",
]
