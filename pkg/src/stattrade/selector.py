"""Rolling train/test selection from a pool of strategies.

Every step ranks the pool on the trailing ``train`` days by AR/MDP, deploys
the winner for the next ``test`` days and slides forward by ``test`` days.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .metrics import TRADING_DAYS, log_mode_summary, max_drawdown_pct
from .snooping import PerformanceMatrix

SHARPE_THRESHOLD = 1.5


@dataclass(frozen=True)
class PoolSpec:
    members: tuple[str, ...]
    metric: str = "SR"
    threshold: float = SHARPE_THRESHOLD

    def __post_init__(self):
        if not self.members:
            raise ValueError("strategy pool is empty")


def build_pool(reports: Iterable, threshold: float = SHARPE_THRESHOLD) -> PoolSpec:
    """Pool of strategies whose annualised Sharpe ratio exceeds ``threshold``."""
    members = [r.strategy for r in reports if r.SR is not None and r.SR > threshold]
    return PoolSpec(tuple(members), "SR", threshold)


@dataclass(frozen=True)
class WindowPlan:
    train: int
    test: int

    def __post_init__(self):
        if self.train < 1 or self.test < 1:
            raise ValueError("window lengths must be positive")
        if self.test > self.train:
            raise ValueError(f"test length {self.test} exceeds train length {self.train}")


def enumerate_window_plans(
    train: Sequence[int] = range(20, 81, 10), test: Sequence[int] = range(10, 81, 10)
) -> list[WindowPlan]:
    return [WindowPlan(tr, te) for tr in train for te in test if te <= tr]


def score(d: np.ndarray) -> tuple[int, float]:
    """Sort key of a training window: (tier, value), larger is better.

    Windows without drawdown and positive return rank above every finite
    AR/MDP and among themselves by AR.
    """
    ar = float(np.sum(d)) * TRADING_DAYS / len(d)
    mdp = max_drawdown_pct(np.exp(np.r_[0.0, np.cumsum(d)]))
    if mdp <= 0:
        return (1, ar) if ar > 0 else (0, 0.0)
    return (0, ar / mdp)


def pick(window: np.ndarray, ids: Sequence[str]) -> int:
    """Column with the best score; ties go to the lexicographically smallest id."""
    keys = [score(window[:, j]) for j in range(window.shape[1])]
    return min(range(len(ids)), key=lambda j: (-keys[j][0], -keys[j][1], ids[j]))


@dataclass(frozen=True, eq=False)
class Deployment:
    start: int  # first deployed day
    stop: int  # one past the last deployed day
    strategy: str


@dataclass(frozen=True, eq=False)
class SelectionResult:
    plan: WindowPlan
    composite: np.ndarray  # daily d, zeros before the first deployment
    chosen: list[Deployment]
    dates: tuple = ()

    @property
    def deployed(self) -> np.ndarray:
        return self.composite[self.plan.train:]

    def summary(self) -> dict:
        """AR, MDP, AR/MDP, SR over deployed days only."""
        return {"Train": self.plan.train, "Test": self.plan.test, **log_mode_summary(self.deployed)}


def rolling_select(pool: PerformanceMatrix, plan: WindowPlan) -> SelectionResult:
    T = pool.T
    if T < plan.train + plan.test:
        raise ValueError(f"{T} days cannot hold a {plan.train}-day train and {plan.test}-day test window")
    v = pool.values
    composite = np.zeros(T)
    chosen = []
    start = plan.train
    while start < T:
        j = pick(v[start - plan.train:start], pool.ids)
        stop = min(start + plan.test, T)
        composite[start:stop] = v[start:stop, j]
        chosen.append(Deployment(start, stop, pool.ids[j]))
        start += plan.test
    return SelectionResult(plan, composite, chosen, pool.dates)


def optimise(pool: PerformanceMatrix, plans: Sequence[WindowPlan] | None = None) -> list[dict]:
    """Summary row per window plan; plans that do not fit the data are skipped."""
    rows = []
    for plan in plans or enumerate_window_plans():
        if pool.T < plan.train + plan.test:
            continue
        rows.append(rolling_select(pool, plan).summary())
    return rows
