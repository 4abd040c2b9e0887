import math

import numpy as np
import pytest
from statsmodels.tsa.stattools import adfuller

from stattrade.datagen import GbmSpec, gbm_series
from stattrade.ingest import log_returns
from stattrade.stattests import AdfError, adf_test, mackinnon_crit, mackinnon_pvalue, ols

REG = {"ct": "ct", "c": "c", "n": "n"}


@pytest.mark.parametrize("variant", ["ct", "c", "n"])
@pytest.mark.parametrize("lags", [0, 1, 2, 4])
def test_matches_statsmodels(rng, variant, lags):
    y = np.cumsum(rng.standard_normal(800))
    ours = adf_test(y, lags, variant)
    ref = adfuller(y, maxlag=lags, regression=REG[variant], autolag=None, regresults=True)
    assert ours.stat == pytest.approx(ref[0], rel=1e-8)
    store = ref[3]
    assert ours.nobs == store.nobs
    assert ours.llf == pytest.approx(store.resols.llf, rel=1e-10)
    assert ours.aic == pytest.approx(store.resols.aic, rel=1e-10)
    assert ours.bic == pytest.approx(store.resols.bic, rel=1e-10)
    assert ours.fstat == pytest.approx(store.resols.fvalue, rel=1e-9)
    p_ref = min(max(ref[1], 0.001), 0.999)
    assert ours.pvalue == pytest.approx(p_ref, rel=1e-8, abs=1e-12)
    for k in ("1%", "5%", "10%"):
        assert ours.crit[k] == pytest.approx(ref[2][k], rel=1e-8)


def test_pvalue_clamp():
    assert mackinnon_pvalue(-50.0) == 0.001
    assert mackinnon_pvalue(5.0) == 0.999
    p = [mackinnon_pvalue(x) for x in np.linspace(-6, 1, 50)]
    assert all(a <= b for a, b in zip(p, p[1:]))


def test_crit_ordering():
    c = mackinnon_crit(500, "ct")
    assert c["1%"] < c["5%"] < c["10%"] < 0


def test_t1_alias():
    y = np.cumsum(np.random.default_rng(1).standard_normal(300))
    assert adf_test(y, 1, "t1").stat == adf_test(y, 1, "ct").stat


def test_residuals_orthogonal(rng):
    y = np.cumsum(rng.standard_normal(1000))
    r = adf_test(y, 2)
    assert np.max(np.abs(r.design.T @ r.resid)) < 1e-8 * np.abs(r.design).max() * len(y)


def test_df_oracle_no_constant(rng):
    y = np.cumsum(rng.standard_normal(500))
    x, dy = y[:-1], np.diff(y)
    g = (x @ dy) / (x @ x)
    e = dy - g * x
    s2 = (e @ e) / (len(dy) - 1)
    t = g / math.sqrt(s2 / (x @ x))
    assert adf_test(y, 0, "n").stat == pytest.approx(t, rel=1e-10)


def test_likelihood_nondecreasing_in_lags(rng):
    y = np.cumsum(rng.standard_normal(2000))
    llf = [adf_test(y, p, skip=5).llf for p in range(5)]
    assert all(b >= a - 1e-9 for a, b in zip(llf, llf[1:]))


def test_decision_rule(rng):
    r = adf_test(rng.standard_normal(2000), 0, alpha=0.05)
    assert r.H == int(r.pvalue < 0.05) == 1


def test_gbm_returns_reject_at_all_lags():
    r = log_returns(gbm_series(GbmSpec(days=5, seed=9))).values
    assert [adf_test(r, p).H for p in (0, 1, 2)] == [1, 1, 1]


def test_table_column_layout(rng):
    col = adf_test(np.cumsum(rng.standard_normal(400)), 2).table_column()
    assert len(col["coeff"]) == 3 and len(col["tStats"]) == 3
    assert set(col) == {"coeff", "tStats", "FStat", "AIC", "BIC", "p-value", "H"}


def test_errors():
    with pytest.raises(AdfError):
        adf_test(np.arange(5.0), 0)
    with pytest.raises(AdfError):
        adf_test(np.ones(100), 0)
    with pytest.raises(AdfError):
        adf_test(np.cumsum(np.ones(100)), -1)
    with pytest.raises(AdfError):
        adf_test(np.r_[np.nan, np.arange(50.0)], 0)
    with pytest.raises(AdfError):
        adf_test(np.arange(50.0), 0, "bogus")


def test_ols_singular():
    X = np.column_stack([np.ones(10), np.ones(10)])
    with pytest.raises(AdfError):
        ols(X, np.arange(10.0))
