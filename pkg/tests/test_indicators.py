import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stattrade import indicators as ind

# Moves below one tick put P - EMA at the rounding floor, so keep them at >= 1e-4 or exactly 0.
_moves = st.one_of(st.just(0.0), st.floats(1e-4, 0.02), st.floats(-0.02, -1e-4))
prices_st = arrays(np.float64, st.integers(30, 120), elements=_moves).map(lambda r: 100.0 * np.exp(np.cumsum(r)))


def _walk(rng, n=400):
    return 3000.0 * np.exp(np.cumsum(0.001 * rng.standard_normal(n)))


def test_ma_constant():
    assert np.all(ind.ma(np.full(10, 7.0), 4).values[3:] == 7.0)


def test_ma_example():
    v = ind.ma([1.0, 2.0, 4.0], 2).values
    assert math.isnan(v[0])
    assert v[1:].tolist() == [1.5, 3.0]


def test_ma_window_one_is_identity():
    p = np.array([3.0, 1.0, 2.0])
    assert np.array_equal(ind.ma(p, 1).values, p)


def test_ma_short_input_all_undefined():
    assert np.all(np.isnan(ind.ma([1.0, 2.0], 5).values))


def test_sma_ratio_constant():
    assert np.all(ind.sma_ratio(np.full(30, 5.0), 5, 20).values[19:] == 1.0)


def test_sma_ratio_example():
    v = ind.sma_ratio([1.0, 2.0, 4.0], 1, 2).values
    assert math.isnan(v[0])
    np.testing.assert_allclose(v[1:], [2 / 1.5, 4 / 3], rtol=1e-15)


def test_sma_ratio_requires_short_below_long():
    with pytest.raises(ValueError):
        ind.sma_ratio(np.ones(10), 5, 5)


def test_sma_ratio_two_routes(rng):
    p = _walk(rng)
    direct = ind.sma_ratio(p, 5, 60).values
    via = ind.sma(p, 5).values / ind.sma(p, 60).values
    np.testing.assert_allclose(direct[59:], via[59:], rtol=1e-12)


def test_rsv_increasing_is_100_and_k_tends_to_100():
    p = np.arange(1.0, 200.0)
    assert np.all(ind.rsv(p, 9).values[8:] == 100.0)
    K, D, _ = ind.kdj(p, 9, 3, 3)
    assert K.values[-1] == pytest.approx(100.0, abs=1e-9)
    assert D.values[-1] == pytest.approx(100.0, abs=1e-9)


def test_kdj_constant_stays_at_seed():
    K, D, J = ind.kdj(np.full(50, 10.0), 5, 3, 3)
    assert np.all(K.values[4:] == 50.0)
    assert np.all(D.values[4:] == 50.0)
    assert np.all(J.values[4:] == 50.0)


def test_kdj_short_example():
    # window [2,3,2] at t=3: H=3, L=2, P=2 gives RSV 0
    r = ind.rsv([1.0, 2.0, 3.0, 2.0], 3).values
    assert r[2] == 100.0 and r[3] == 0.0
    K, _, _ = ind.kdj([1.0, 2.0, 3.0, 2.0], 3, 1, 3)
    assert np.array_equal(K.values[2:], r[2:])


def test_kdj_recursion_by_hand(rng):
    p = _walk(rng, 60)
    r = ind.rsv(p, 9).values
    K, D, J = ind.kdj(p, 9, 3, 3)
    k = d = 50.0
    for t in range(8, 60):
        k = 0.5 * k + 0.5 * r[t]
        d = 0.5 * d + 0.5 * k
        assert K.values[t] == pytest.approx(k, abs=1e-10)
        assert D.values[t] == pytest.approx(d, abs=1e-10)
    assert np.all(np.isnan(K.values[:8]))


def test_kdj_j_identity(rng):
    K, D, J = ind.kdj(_walk(rng), 14, 3, 3)
    np.testing.assert_array_equal(J.values, 3 * K.values - 2 * D.values)


def test_kdj_bounded(rng):
    K, D, _ = ind.kdj(_walk(rng, 2000), 5, 3, 3)
    ok = K.defined
    assert np.all((K.values[ok] >= 0) & (K.values[ok] <= 100))
    assert np.all((D.values[ok] >= 0) & (D.values[ok] <= 100))


def test_ema_weights():
    # weights 1, 2, 3 oldest to newest
    assert ind.ema([1.0, 2.0, 4.0], 3).values[2] == pytest.approx((1 + 4 + 12) / 6)


def test_sboll_example():
    v = ind.sboll([1.0, 1.0, 4.0], 2).values
    assert v[2] == pytest.approx(1 / math.sqrt(5), abs=1e-15)
    assert v[1] == 0.0


def test_sboll_constant_is_zero():
    assert np.all(ind.sboll(np.full(40, 3.0), 20).values[19:] == 0.0)


def test_sboll_matches_classical_bands(rng):
    p = _walk(rng)
    mid, up, _ = ind.bollinger(p, 20, 1.0, ddof=1)
    s = ind.sboll(p, 20).values
    np.testing.assert_allclose(s[19:], (p[19:] - mid.values[19:]) / (up.values[19:] - mid.values[19:]), rtol=1e-9)


def test_classical_bollinger_uses_population_sigma():
    p = np.array([1.0, 3.0])
    mid, up, lo = ind.bollinger(p, 2, 2.0)
    centre = (1 + 2 * 3) / 3
    sig = math.sqrt(((1 - centre) ** 2 + (3 - centre) ** 2) / 2)
    assert up.values[1] == pytest.approx(centre + 2 * sig)
    assert lo.values[1] == pytest.approx(centre - 2 * sig)


@settings(max_examples=60, deadline=None)
@given(prices_st, st.floats(0.01, 1000.0))
def test_scale_invariance(p, c):
    for f in (lambda x: ind.sma_ratio(x, 3, 12), lambda x: ind.sboll(x, 10), lambda x: ind.rsv(x, 9)):
        np.testing.assert_allclose(f(c * p).values, f(p).values, atol=1e-9, equal_nan=True)
    for a, b in zip(ind.kdj(c * p, 9, 3, 3), ind.kdj(p, 9, 3, 3)):
        np.testing.assert_allclose(a.values, b.values, atol=1e-9, equal_nan=True)


@settings(max_examples=40, deadline=None)
@given(prices_st, st.integers(0, 10 ** 6))
def test_window_locality(p, seed):
    n = 10
    t = len(p) - 1
    q = p.copy()
    q[np.random.default_rng(seed).integers(0, t - n + 1)] *= 1.5
    for f in (lambda x: ind.sma_ratio(x, 3, n), lambda x: ind.sboll(x, n), lambda x: ind.rsv(x, n)):
        assert f(q).values[t] == f(p).values[t]


def test_ratio_cross_matches_difference_cross(rng):
    for _ in range(20):
        p = _walk(rng)
        b = 0.0005
        R = ind.sma_ratio(p, 5, 20).values
        diff = ind.ma(p, 5).values - ind.ma(p, 20).values
        long_ma = ind.ma(p, 20).values
        assert np.array_equal((R > 1 + b)[19:], (diff > b * long_ma)[19:])


def test_per_day_resets_windows():
    p = np.r_[np.arange(1.0, 11.0), np.arange(1.0, 11.0)]
    v = ind.per_day(ind.ma, p, [0, 10], 3).values
    assert np.isnan(v[10]) and np.isnan(v[11])
    assert v[12] == 2.0


def test_bad_window():
    with pytest.raises(ValueError):
        ind.ma([1.0, 2.0], 0)
    with pytest.raises(ValueError):
        ind.sboll([1.0, 2.0], 1)
