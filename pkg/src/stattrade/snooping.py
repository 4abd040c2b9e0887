"""Stationary bootstrap, Hansen's SPA test and the stepwise SPA procedure.

Performance matrices are stored days x strategies (``values[t, k]``), the
layout of the daily-performance CSV.  Bootstrap index matrices are 0-based.

The studentising scale omega_k estimates sd(sqrt(n) * mean(d_k)).  Three
estimators are available:

* ``"nw"`` (default): Newey-West with Bartlett weights and lag
  floor(4 * (n / 100) ** (2 / 9));
* ``"bootstrap"``: the standard deviation of sqrt(n) * mean(d*_k) over the
  same resamples used for the critical value;
* ``"kernel"``: the long-run variance with the stationary-bootstrap weights
  (1 - i/n) Q^i + (i/n) Q^(n-i).

The last two put weight on about 1 / (1 - Q) autocovariances and so carry
more sampling noise; under an all-null universe of 50 strategies over 500
days that noise pushes the max statistic past its nominal size.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_B = 500
DEFAULT_Q = 0.9
OMEGA_METHODS = ("nw", "bootstrap", "kernel")


class SnoopingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PerformanceMatrix:
    values: np.ndarray  # (T days, K strategies)
    ids: tuple[str, ...]
    dates: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise SnoopingError("performance matrix must be 2-D (days x strategies)")
        T, K = v.shape
        if K < 1 or T < 10:
            raise SnoopingError(f"need K >= 1 strategies and T >= 10 days, got K={K}, T={T}")
        if not np.all(np.isfinite(v)):
            raise SnoopingError("performance matrix has missing or non-finite entries")
        if len(self.ids) != K or len(set(self.ids)) != K:
            raise SnoopingError("strategy ids must be unique, one per column")
        if self.dates and len(self.dates) != T:
            raise SnoopingError("date axis length differs from row count")
        object.__setattr__(self, "values", v)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[1]

    def column(self, sid: str) -> np.ndarray:
        return self.values[:, self.ids.index(sid)]

    def select(self, ids: Sequence[str]) -> "PerformanceMatrix":
        cols = [self.ids.index(i) for i in ids]
        return PerformanceMatrix(self.values[:, cols], tuple(ids), self.dates)


def write_matrix(matrix: PerformanceMatrix, path: str | Path) -> None:
    """Rows are dates, columns strategy ids; floats in shortest round-trip form."""
    dates = matrix.dates or tuple(range(matrix.T))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *matrix.ids])
        for d, row in zip(dates, matrix.values.tolist()):
            w.writerow([d.isoformat() if isinstance(d, date) else d, *map(repr, row)])


def read_matrix(path: str | Path) -> PerformanceMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SnoopingError(f"{path}: empty matrix file")
    header, body = rows[0], [r for r in rows[1:] if r]
    dates = []
    for r in body:
        try:
            dates.append(date.fromisoformat(r[0]))
        except ValueError:
            dates.append(r[0])
    try:
        values = np.array([[float(x) for x in r[1:]] for r in body], dtype=np.float64)
    except ValueError as exc:
        raise SnoopingError(f"{path}: malformed matrix ({exc})") from None
    if values.ndim != 2 or values.shape[1] != len(header) - 1:
        raise SnoopingError(f"{path}: ragged matrix rows")
    return PerformanceMatrix(values, tuple(header[1:]), tuple(dates))


@dataclass(frozen=True, eq=False)
class BootstrapPlan:
    """Stationary-bootstrap resampling plan; ``indices`` is B x T, 0-based."""

    B: int = DEFAULT_B
    Q: float = DEFAULT_Q
    seed: int = 0
    T: int = 0
    indices: np.ndarray | None = None

    @classmethod
    def build(cls, T: int, B: int = DEFAULT_B, Q: float = DEFAULT_Q, seed: int = 0) -> "BootstrapPlan":
        return cls(B, Q, seed, T, stationary_bootstrap_indices(T, B, Q, seed))

    def counts(self) -> np.ndarray:
        """B x T matrix of how often each day appears in each resample."""
        B, T = self.indices.shape
        flat = self.indices + (np.arange(B) * T)[:, None]
        return np.bincount(flat.ravel(), minlength=B * T).reshape(B, T).astype(np.float64)


def _bootstrap_row(T: int, Q: float, rng: np.random.Generator) -> np.ndarray:
    restart = rng.random(T) >= Q
    restart[0] = True
    fresh = rng.integers(0, T, size=T)
    t = np.arange(T)
    anchor = np.maximum.accumulate(np.where(restart, t, 0))
    return (fresh[anchor] + (t - anchor)) % T


def stationary_bootstrap_indices(T: int, B: int = DEFAULT_B, Q: float = DEFAULT_Q, seed: int = 0) -> np.ndarray:
    """B rows of length T: uniform start, then successor (mod T) with prob Q or a uniform restart.

    Row b uses its own stream spawned from ``seed``, so it can be regenerated
    independently of the others.
    """
    if T < 2 or B < 1:
        raise SnoopingError("need T >= 2 and B >= 1")
    if not 0 <= Q < 1:
        raise SnoopingError(f"continuation probability Q must lie in [0, 1), got {Q}")
    children = np.random.SeedSequence(seed).spawn(B)
    return np.stack([_bootstrap_row(T, Q, np.random.default_rng(c)) for c in children])


def _bootstrap_means(values: np.ndarray, plan: BootstrapPlan) -> np.ndarray:
    if plan.indices is None or plan.indices.shape[1] != values.shape[0]:
        raise SnoopingError("bootstrap plan does not match the number of days")
    return plan.counts() @ values / values.shape[0]


def _omega(boot_means: np.ndarray, n: int) -> np.ndarray:
    return np.sqrt(n * boot_means.var(axis=0))


def _autocov(values: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased autocovariances gamma_0..gamma_max_lag per column, via FFT."""
    n = values.shape[0]
    x = values - values.mean(axis=0)
    f = np.fft.rfft(x, 2 * n, axis=0)
    return np.fft.irfft(f * np.conj(f), 2 * n, axis=0)[: max_lag + 1] / n


def newey_west_lag(n: int) -> int:
    return int(4 * (n / 100.0) ** (2.0 / 9.0))


def newey_west_omega(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    v = v[:, None] if v.ndim == 1 else v
    n = v.shape[0]
    L = min(newey_west_lag(n), n - 1)
    g = _autocov(v, L)
    w = 1.0 - np.arange(1, L + 1) / (L + 1)
    return np.sqrt(np.maximum(g[0] + 2.0 * (w[:, None] * g[1:]).sum(axis=0), 0.0))


def kernel_omega(values, Q: float = DEFAULT_Q) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    v = v[:, None] if v.ndim == 1 else v
    n = v.shape[0]
    g = _autocov(v, n - 1)
    i = np.arange(1, n)
    k = (n - i) / n * Q**i + i / n * Q ** (n - i)
    return np.sqrt(np.maximum(g[0] + 2.0 * (k[:, None] * g[1:]).sum(axis=0), 0.0))


def omega_hat(row, plan: BootstrapPlan) -> float:
    """Bootstrap estimate of sd(sqrt(n) * mean(d_k))."""
    d = np.asarray(row, dtype=np.float64)
    if np.ptp(d) == 0:
        raise SnoopingError("omega is undefined for a constant performance row")
    return float(_omega(_bootstrap_means(d[:, None], plan), len(d))[0])


@dataclass(frozen=True, eq=False)
class SpaResult:
    ids: tuple[str, ...]
    tstats: np.ndarray
    omega: np.ndarray
    mu: np.ndarray
    mean: np.ndarray
    q: float  # raw bootstrap quantile
    q_star: float  # max(0, q)
    alpha: float
    reject: bool
    excluded: tuple[str, ...] = ()
    boot_max: np.ndarray | None = field(default=None, repr=False)

    @property
    def max_tstat(self) -> float:
        return float(self.tstats.max()) if len(self.tstats) else 0.0

    @property
    def pvalue(self) -> float:
        """Share of bootstrap maxima at or above the observed one, both floored at 0."""
        if self.boot_max is None or not len(self.tstats):
            return 1.0
        return float(np.mean(np.maximum(self.boot_max, 0.0) >= max(self.max_tstat, 0.0)))


def upper_quantile(samples: np.ndarray, alpha: float) -> float:
    """Smallest sample value v with at least 1 - alpha of samples <= v."""
    s = np.sort(np.asarray(samples, dtype=np.float64))
    k = math.ceil((1.0 - alpha) * len(s) - 1e-9)
    return float(s[min(max(k, 1), len(s)) - 1])


class _SpaCore:
    """Quantities shared by SPA and every Step-SPA iteration."""

    def __init__(self, matrix: PerformanceMatrix, plan: BootstrapPlan, omega: str = "nw"):
        if omega not in OMEGA_METHODS:
            raise SnoopingError(f"unknown omega estimator {omega!r}; choose from {OMEGA_METHODS}")
        v = matrix.values
        n = matrix.T
        boot = _bootstrap_means(v, plan)
        if omega == "bootstrap":
            omega = _omega(boot, n)
        elif omega == "kernel":
            omega = kernel_omega(v, plan.Q)
        else:
            omega = newey_west_omega(v)
        dead = omega <= 1e-14 * np.maximum(np.abs(v).max(axis=0), 1e-300)
        for sid in np.asarray(matrix.ids)[dead]:
            logger.warning("strategy %s has zero bootstrap variance; excluded from SPA", sid)
        keep = ~dead
        self.ids = tuple(np.asarray(matrix.ids)[keep].tolist())
        self.excluded = tuple(np.asarray(matrix.ids)[dead].tolist())
        self.n = n
        self.mean = v[:, keep].mean(axis=0)
        self.omega = omega[keep]
        root_n = math.sqrt(n)
        self.tstats = root_n * self.mean / self.omega
        threshold = math.sqrt(2.0 * math.log(math.log(n))) if n > math.e else 0.0
        self.mu = np.where(root_n * self.mean <= -self.omega * threshold, self.mean, 0.0)
        self.centred = root_n * (boot[:, keep] - self.mean + self.mu) / self.omega

    def critical(self, cols: np.ndarray, alpha: float) -> tuple[float, np.ndarray]:
        if not len(cols):
            return 0.0, np.zeros(self.centred.shape[0])
        boot_max = self.centred[:, cols].max(axis=1)
        return upper_quantile(boot_max, alpha), boot_max


def spa_test(matrix: PerformanceMatrix, plan: BootstrapPlan, alpha: float = 0.05, omega: str = "nw") -> SpaResult:
    """Test H0: every strategy has non-positive expected daily performance."""
    if not 0 < alpha < 1:
        raise SnoopingError("alpha must lie in (0, 1)")
    core = _SpaCore(matrix, plan, omega)
    q, boot_max = core.critical(np.arange(len(core.ids)), alpha)
    q_star = max(0.0, q)
    max_t = float(core.tstats.max()) if len(core.ids) else 0.0
    return SpaResult(
        ids=core.ids,
        tstats=core.tstats,
        omega=core.omega,
        mu=core.mu,
        mean=core.mean,
        q=q,
        q_star=q_star,
        alpha=alpha,
        reject=bool(len(core.ids)) and max_t > q_star,
        excluded=core.excluded,
        boot_max=boot_max,
    )


@dataclass(frozen=True)
class StepSpaResult:
    significant: tuple[str, ...]  # in removal order
    critical_values: tuple[float, ...]  # q* of the universe at each step, including the final one
    alpha: float
    excluded: tuple[str, ...] = ()


def step_spa(matrix: PerformanceMatrix, plan: BootstrapPlan, alpha: float = 0.05, omega: str = "nw") -> StepSpaResult:
    """Remove the top strategy while its statistic beats the surviving universe's q*.

    Ties in the statistic are broken by strategy id.
    """
    if not 0 < alpha < 1:
        raise SnoopingError("alpha must lie in (0, 1)")
    core = _SpaCore(matrix, plan, omega)
    order = sorted(range(len(core.ids)), key=lambda j: (-core.tstats[j], core.ids[j]))
    significant, crits = [], []
    for pos, j in enumerate(order):
        q, _ = core.critical(np.array(order[pos:]), alpha)
        q_star = max(0.0, q)
        crits.append(q_star)
        if not core.tstats[j] > q_star:
            break
        significant.append(core.ids[j])
    return StepSpaResult(tuple(significant), tuple(crits), alpha, core.excluded)
