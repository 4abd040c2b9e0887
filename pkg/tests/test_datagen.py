from datetime import date

import numpy as np
import pytest

from stattrade.datagen import GbmSpec, bar_grid, business_days, gbm_series, planted_matrix
from stattrade.ingest import SessionCalendar, log_returns


def test_business_days_skip_weekends():
    days = business_days(date(2016, 1, 8), 3)
    assert days == [date(2016, 1, 8), date(2016, 1, 11), date(2016, 1, 12)]


def test_bar_grid_ends_at_close():
    g = bar_grid(date(2016, 3, 1), 60, SessionCalendar.default())
    assert g[0] == 9 * 3600 + 30 * 60 + 60 and g[-1] == 15 * 3600
    assert len(g) == 240


def test_gbm_shape_and_start():
    s = gbm_series(GbmSpec(days=4, seed=1, frequency=30))
    assert s.n_days == 4 and len(s) == 4 * 480
    assert s.prices[0] == 3000.0
    assert np.all(s.prices > 0)


def test_gbm_deterministic():
    a = gbm_series(GbmSpec(days=2, seed=5))
    b = gbm_series(GbmSpec(days=2, seed=5))
    assert np.array_equal(a.prices, b.prices)
    assert not np.array_equal(a.prices, gbm_series(GbmSpec(days=2, seed=6)).prices)


def test_gbm_realised_volatility():
    s = gbm_series(GbmSpec(days=60, seed=3, sigma=0.3))
    r = log_returns(s).values
    annual = np.sqrt(r.var() * len(r) / 60 * 250)
    assert annual == pytest.approx(0.3, rel=0.02)


def test_gbm_drift():
    s = gbm_series(GbmSpec(days=250, seed=0, sigma=0.0, r=0.1, frequency=60))
    # 250 days of dt summing to one year, minus the unused first increment
    assert np.log(s.prices[-1] / s.prices[0]) == pytest.approx(0.1 * (1 - 1 / len(s)), rel=1e-12)


def test_gbm_validation():
    with pytest.raises(ValueError):
        GbmSpec(p0=0)
    with pytest.raises(ValueError):
        GbmSpec(sigma=-1)


def test_planted_matrix():
    m = planted_matrix(5, 100, effect=3.0, seed=2, column=2)
    assert m.values.shape == (100, 5)
    assert m.ids == ("S0", "S1", "S2", "S3", "S4")
    assert m.values[:, 2].mean() > 2.0
    assert len(m.dates) == 100 and m.dates[0] == date(2016, 1, 4)
    with pytest.raises(ValueError):
        planted_matrix(5, 100, column=5)
