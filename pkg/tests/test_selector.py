import numpy as np
import pytest

from stattrade.metrics import BacktestReport
from stattrade.selector import (
    PoolSpec,
    WindowPlan,
    build_pool,
    enumerate_window_plans,
    optimise,
    pick,
    rolling_select,
    score,
)
from stattrade.snooping import PerformanceMatrix


def alternating_pool(T=200, period=30, K=3, seed=0):
    """Strategy k is the clear winner on block k mod K of length ``period``."""
    rng = np.random.default_rng(seed)
    v = 0.001 * rng.standard_normal((T, K))
    for t in range(T):
        v[t, (t // period) % K] += 0.01
    return PerformanceMatrix(v, tuple(f"P{k}" for k in range(K)))


def stitched_oracle(pool, plan):
    out = np.zeros(pool.T)
    for start in range(plan.train, pool.T, plan.test):
        w = pool.values[start - plan.train:start]
        best, key = None, None
        for j, sid in enumerate(pool.ids):
            d = w[:, j]
            eq = np.exp(np.r_[0.0, np.cumsum(d)])
            mdp = float(np.max(1 - eq / np.maximum.accumulate(eq)))
            ar = d.sum() * 250 / len(d)
            k = (1, ar) if mdp <= 0 and ar > 0 else ((0, 0.0) if mdp <= 0 else (0, ar / mdp))
            if key is None or k > key or (k == key and sid < pool.ids[best]):
                best, key = j, k
        out[start:start + plan.test] = pool.values[start:start + plan.test, best]
    return out


def test_plan_count():
    plans = enumerate_window_plans()
    assert len(plans) == 35
    assert all(p.test <= p.train for p in plans)
    assert plans[0] == WindowPlan(20, 10) and plans[-1] == WindowPlan(80, 80)


def test_plan_validation():
    with pytest.raises(ValueError):
        WindowPlan(20, 30)


@pytest.mark.parametrize("plan", [WindowPlan(30, 10), WindowPlan(40, 20), WindowPlan(60, 60), WindowPlan(20, 10)])
def test_matches_stitched_oracle(plan):
    pool = alternating_pool()
    res = rolling_select(pool, plan)
    assert np.array_equal(res.composite, stitched_oracle(pool, plan))
    assert np.all(res.composite[: plan.train] == 0)


def test_no_lookahead():
    pool = alternating_pool(seed=3)
    plan = WindowPlan(40, 20)
    base = rolling_select(pool, plan)
    cut = 120
    v = pool.values.copy()
    v[cut:] = np.random.default_rng(99).standard_normal(v[cut:].shape)
    changed = rolling_select(PerformanceMatrix(v, pool.ids), plan)
    before = [d for d in base.chosen if d.start < cut]
    assert [d.strategy for d in before] == [d.strategy for d in changed.chosen[: len(before)]]
    assert np.array_equal(base.composite[:cut], changed.composite[:cut])


def test_tie_goes_to_smallest_id():
    w = np.tile(np.array([[0.01, -0.005]]).T, (10, 1))[:20]
    window = np.column_stack([w[:, 0], w[:, 0], w[:, 0]])
    assert pick(window, ("b", "a", "c")) == 1


def test_drawdown_free_winner_ranks_first():
    up = np.full(20, 0.001)
    bumpy = np.tile([0.05, -0.01], 10)
    assert score(up)[0] == 1 and score(bumpy)[0] == 0
    assert pick(np.column_stack([bumpy, up]), ("a", "b")) == 1


def test_summary_excludes_training_prefix():
    pool = alternating_pool()
    res = rolling_select(pool, WindowPlan(50, 10))
    assert len(res.deployed) == pool.T - 50
    s = res.summary()
    assert s["Train"] == 50 and s["Test"] == 10
    assert s["AR"] == pytest.approx(res.deployed.sum() * 250 / len(res.deployed))


def test_optimise_skips_plans_that_do_not_fit():
    rows = optimise(alternating_pool(T=100))
    assert all(r["Train"] + r["Test"] <= 100 for r in rows)
    assert len(rows) < 35


def test_too_short():
    with pytest.raises(ValueError):
        rolling_select(alternating_pool(T=25), WindowPlan(20, 10))


def _rep(name, sr):
    return BacktestReport(name, 0, 0, None, 0.0, 0.0, 0.0, None, sr, 0.0, None, None)


def test_build_pool():
    pool = build_pool([_rep("a", 2.0), _rep("b", 1.5), _rep("c", None), _rep("d", 1.6)])
    assert pool.members == ("a", "d")
    with pytest.raises(ValueError):
        PoolSpec(())
