import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from garch_fis.errors import ConstantActual, Empty, EmptyWindow, LengthMismatch, SeriesTooShort, ZeroActual
from garch_fis.evaluation import BaselineKind, baseline_forecast, grid_search_window
from garch_fis.metrics import evaluate, mae, mape, r2
from garch_fis.synthetic import random_walk

from .oracles import mae_direct, mape_direct, r2_direct


def test_mae_examples():
    assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mae([1, 3], [2, 2]) == 1.0
    with pytest.raises(LengthMismatch):
        mae([1.0], [1.0, 2.0])
    with pytest.raises(Empty):
        mae([], [])


def test_mape_examples():
    assert mape([110], [100]) == 10.0
    assert mape([3.0, 4.0], [3.0, 4.0]) == 0.0
    with pytest.raises(ZeroActual):
        mape([1.0, 2.0], [0.0, 2.0])


def test_r2_examples():
    a = np.array([1.0, 4.0, 2.0, 8.0])
    assert r2(a, a) == 1.0
    assert r2(np.full(4, a.mean()), a) == 0.0
    assert r2([0.0, 0.0], [-1.0, 1.0]) == 0.0
    with pytest.raises(ConstantActual):
        r2([1.0, 2.0], [3.0, 3.0])


def test_metrics_against_direct_summation(rng):
    for _ in range(100):
        n = int(rng.integers(2, 200))
        a = rng.normal(100, 10, n)
        p = a + rng.normal(0, 3, n)
        assert abs(mae(p, a) - mae_direct(p, a)) < 1e-12
        assert abs(mape(p, a) - mape_direct(p, a)) < 1e-12
        assert abs(r2(p, a) - r2_direct(p, a)) < 1e-12


def test_metrics_permutation_invariance(rng):
    a = rng.normal(50, 5, 40)
    p = a + rng.normal(0, 1, 40)
    perm = rng.permutation(40)
    assert mae(p[perm], a[perm]) == pytest.approx(mae(p, a), abs=1e-12)
    assert mape(p[perm], a[perm]) == pytest.approx(mape(p, a), abs=1e-12)
    assert r2(p[perm], a[perm]) == pytest.approx(r2(p, a), abs=1e-12)


finite = st.floats(-1e4, 1e4, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=30))
def test_mae_triangle_bound(triples):
    p, mid, a = (np.array(x) for x in zip(*triples))
    assert mae(p, a) <= mae(p, mid) + mae(mid, a) + 1e-9


def test_evaluate_handles_undefined_r2():
    rep = evaluate([1.0, 1.0], [1.0, 1.0])
    assert rep.mae == 0.0 and np.isnan(rep.r2)
    assert rep.to_dict()["r2"] is None


def test_baseline_examples():
    assert baseline_forecast("persistence", [1.0, 5.0, 42.0], 3).predictions.tolist() == [42.0] * 3
    assert baseline_forecast(BaselineKind.MOVING_AVERAGE, [3.0] * 4, 5).predictions.tolist() == [3.0] * 5
    assert baseline_forecast("moving-average", [0.0, 10.0], 1).predictions.tolist() == [5.0]
    # recursive: [0, 10] -> 5, then [10, 5] -> 7.5
    assert baseline_forecast("moving-average", [0.0, 10.0], 2).predictions.tolist() == [5.0, 7.5]
    with pytest.raises(EmptyWindow):
        baseline_forecast("persistence", [], 1)


def test_grid_single_candidate():
    p = random_walk(300, seed=1)
    res = grid_search_window(p, [5], h=1)
    assert res.best_window == 5 and set(res.reports) == {5}


def test_grid_injected_oracle_selects_dominant():
    p = random_walk(300, seed=2)

    def factory(W, fit_prices):
        def fc(history, n):
            t = history.size - 1
            truth = p[t + 1 : t + 1 + n]
            return truth if W == 5 else truth + 1.0

        return fc

    res = grid_search_window(p, [3, 5, 10, 15], h=2, forecaster_factory=factory)
    assert res.best_window == 5
    assert res.reports[5].mae == 0.0


def test_grid_tie_prefers_smaller_window():
    p = random_walk(300, seed=3)
    res = grid_search_window(p, [10, 3, 5], h=1, forecaster_factory=lambda W, _: lambda h, n: np.full(n, h[-1]))
    assert res.best_window == 3


def test_grid_random_walk_best_is_argmin():
    p = random_walk(400, seed=4)
    res = grid_search_window(p, [3, 5, 10, 15], h=1)
    best = res.reports[res.best_window].mae
    assert all(best <= r.mae for r in res.reports.values())
    assert [row["window"] for row in res.table()] == [3, 5, 10, 15]


def test_grid_too_short():
    with pytest.raises(SeriesTooShort):
        grid_search_window(random_walk(40, seed=0), [3, 15], h=5)
