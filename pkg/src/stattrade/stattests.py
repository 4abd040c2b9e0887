"""Augmented Dickey-Fuller unit-root test.

The regression is fitted in difference form

    dy_t = c + delta * t + gamma * y_{t-1} + sum_i beta_i * dy_{t-i} + e_t

with gamma = phi - 1, so H0: phi = 1 is H0: gamma = 0 and the test statistic
is the t-ratio of gamma.  P-values use MacKinnon's (1994) response-surface
approximation and critical values MacKinnon's (2010) finite-sample surfaces,
both for a single I(1) series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

VARIANTS = ("ct", "c", "n")
_ALIASES = {"trend": "ct", "t1": "ct", "drift": "c", "none": "n", "nc": "n"}

P_FLOOR, P_CEIL = 0.001, 0.999

# MacKinnon (1994) p-value surfaces, N = 1.  Left tail below tau_star uses
# norm.cdf of a quadratic in tau, the rest a cubic.
_TAU_STAR = {"n": -1.04, "c": -1.61, "ct": -2.89}
_TAU_MIN = {"n": -19.04, "c": -18.83, "ct": -16.18}
_TAU_MAX = {"n": math.inf, "c": 2.74, "ct": 0.7}
_SMALL_P = {
    "n": (0.6344, 1.2378, 3.2496e-2),
    "c": (2.1659, 1.4412, 3.8269e-2),
    "ct": (3.2512, 1.6047, 4.9588e-2),
}
_LARGE_P = {
    "n": (0.4797, 9.3557e-1, -0.6999e-1, 3.3066e-2),
    "c": (1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2),
    "ct": (2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2),
}
# MacKinnon (2010) critical values: b0 + b1/T + b2/T^2 + b3/T^3 at 1%, 5%, 10%.
_CRIT_2010 = {
    "n": ((-2.56574, -2.2358, -3.627, 0.0), (-1.94100, -0.2686, -3.365, 31.223), (-1.61682, 0.2656, -2.714, 25.364)),
    "c": ((-3.43035, -6.5393, -16.786, -79.433), (-2.86154, -2.8903, -4.234, -40.040), (-2.56677, -1.5384, -2.809, 0.0)),
    "ct": ((-3.95877, -9.0531, -28.428, -134.155), (-3.41049, -4.3904, -9.036, -45.374), (-3.12705, -2.5856, -3.925, -22.380)),
}


class AdfError(ValueError):
    pass


def _variant(v: str) -> str:
    v = _ALIASES.get(v, v)
    if v not in VARIANTS:
        raise AdfError(f"unknown ADF variant {v!r}")
    return v


def mackinnon_pvalue(stat: float, variant: str = "ct") -> float:
    """Approximate left-tail p-value of a DF t-statistic, clamped to [0.001, 0.999]."""
    v = _variant(variant)
    if stat > _TAU_MAX[v]:
        p = 1.0
    elif stat < _TAU_MIN[v]:
        p = 0.0
    else:
        coef = _SMALL_P[v] if stat <= _TAU_STAR[v] else _LARGE_P[v]
        p = float(norm.cdf(np.polyval(coef[::-1], stat)))
    return min(max(p, P_FLOOR), P_CEIL)


def mackinnon_crit(nobs: int, variant: str = "ct") -> dict[str, float]:
    v = _variant(variant)
    out = {}
    for label, b in zip(("1%", "5%", "10%"), _CRIT_2010[v]):
        out[label] = b[0] + b[1] / nobs + b[2] / nobs**2 + b[3] / nobs**3
    return out


@dataclass(frozen=True, eq=False)
class OlsFit:
    params: np.ndarray
    bse: np.ndarray
    resid: np.ndarray
    rss: float
    nobs: int
    llf: float


def ols(X: np.ndarray, y: np.ndarray) -> OlsFit:
    """Least squares through a thin QR factorisation."""
    n, k = X.shape
    if n <= k:
        raise AdfError(f"{n} observations cannot identify {k} coefficients")
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-10 * max(diag.max(), 1e-300):
        raise AdfError("singular regression matrix")
    beta = np.linalg.solve(R, Q.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    s2 = rss / (n - k)
    Rinv = np.linalg.inv(R)
    bse = np.sqrt(s2 * np.sum(Rinv * Rinv, axis=1))
    llf = -0.5 * n * (math.log(2 * math.pi) + math.log(rss / n) + 1.0) if rss > 0 else math.inf
    return OlsFit(beta, bse, resid, rss, n, llf)


@dataclass(frozen=True, eq=False)
class AdfResult:
    variant: str
    lags: int
    nobs: int
    names: tuple[str, ...]
    coef: np.ndarray  # difference form; the y_{t-1} entry is gamma = phi - 1
    tstats: np.ndarray
    stat: float
    phi: float
    fstat: float
    aic: float
    bic: float
    llf: float
    pvalue: float
    crit: dict = field(default_factory=dict)
    alpha: float = 0.05
    reject: bool = False
    resid: np.ndarray | None = None
    design: np.ndarray | None = None

    @property
    def H(self) -> int:
        return int(self.reject)

    def table_column(self) -> dict:
        """Coefficients and t-stats of (phi, beta_1..beta_p) plus fit summary."""
        i = self.names.index("y_lag")
        coeff = [self.phi] + self.coef[i + 1:].tolist()
        return {
            "coeff": coeff,
            "tStats": self.tstats[i:].tolist(),
            "FStat": self.fstat,
            "AIC": self.aic,
            "BIC": self.bic,
            "p-value": self.pvalue,
            "H": self.H,
        }


def adf_design(y, lags: int, variant: str = "ct", skip: int | None = None):
    """Regressand and design matrix of the ADF regression.

    ``skip`` leading observations of ``y`` are dropped (default ``lags + 1``);
    fits with different ``lags`` share a sample when given the same ``skip``.
    """
    v = _variant(variant)
    y = np.asarray(y, dtype=np.float64)
    skip = lags + 1 if skip is None else skip
    if skip < lags + 1:
        raise AdfError("skip must be at least lags + 1")
    dy = np.diff(y)
    rows = np.arange(skip, len(y))  # index t of y_t
    cols, names = [], []
    if v in ("c", "ct"):
        cols.append(np.ones(len(rows)))
        names.append("const")
    if v == "ct":
        cols.append(rows.astype(np.float64))
        names.append("trend")
    cols.append(y[rows - 1])
    names.append("y_lag")
    for i in range(1, lags + 1):
        cols.append(dy[rows - 1 - i])
        names.append(f"dy_lag{i}")
    return dy[rows - 1], np.column_stack(cols), tuple(names)


def adf_test(series, lags: int = 0, variant: str = "ct", alpha: float = 0.05, skip: int | None = None) -> AdfResult:
    """ADF test of H0: unit root.  ``reject`` (H = 1) iff p-value < alpha."""
    y = np.asarray(series, dtype=np.float64)
    if lags < 0 or int(lags) != lags:
        raise AdfError("lags must be a non-negative integer")
    if not 0 < alpha < 1:
        raise AdfError("alpha must lie in (0, 1)")
    if y.ndim != 1 or len(y) <= lags + 10:
        raise AdfError(f"series of length {len(y)} too short for {lags} lags")
    if not np.all(np.isfinite(y)):
        raise AdfError("series contains non-finite values")
    v = _variant(variant)
    dy, X, names = adf_design(y, lags, v, skip)
    fit = ols(X, dy)
    n, k = X.shape
    i = names.index("y_lag")
    tstats = fit.params / fit.bse
    stat = float(tstats[i])

    has_const = v != "n"
    tss = float(((dy - dy.mean()) ** 2).sum() if has_const else dy @ dy)
    q = k - 1 if has_const else k
    fstat = ((tss - fit.rss) / q) / (fit.rss / (n - k)) if fit.rss > 0 else math.inf
    pvalue = mackinnon_pvalue(stat, v)
    return AdfResult(
        variant=v,
        lags=int(lags),
        nobs=n,
        names=names,
        coef=fit.params,
        tstats=tstats,
        stat=stat,
        phi=1.0 + float(fit.params[i]),
        fstat=float(fstat),
        aic=-2 * fit.llf + 2 * k,
        bic=-2 * fit.llf + k * math.log(n),
        llf=fit.llf,
        pvalue=pvalue,
        crit=mackinnon_crit(n, v),
        alpha=alpha,
        reject=pvalue < alpha,
        resid=fit.resid,
        design=X,
    )
