import math

import numpy as np
import pytest

from garch_fis.errors import EmptyRuleBase, TestPartitionTooShort
from garch_fis.evaluation import BaselineForecaster, BaselineKind
from garch_fis.fis import FuzzyRule, ParamSet, RuleBase, build_membership_params, theta_for_window, wm_train
from garch_fis.forecaster import (
    ForecastConfig,
    fit_forecaster,
    forecast_one_step,
    multi_step_forecast,
    rolling_backtest,
)
from garch_fis.synthetic import random_walk, trend_with_garch_noise
from garch_fis.timeseries import Window, fit_normalization


@pytest.fixture(scope="module")
def series():
    return random_walk(600, vol_pct=1.0, seed=21)


@pytest.fixture(scope="module")
def trained(series):
    return fit_forecaster(series[:480], ForecastConfig(window_length=5))


def constant_model(W=10):
    rules, theta = wm_train(np.full(15, 50.0), W, 1)
    return rules, theta


def test_one_step_constant():
    rules, theta = constant_model()
    assert forecast_one_step(Window(np.full(10, 50.0)), theta, rules) == 50.0


def test_one_step_at_rule_centers():
    theta = ParamSet({i: build_membership_params(10.0 * i + 100, 1.0) for i in range(3)})
    x = np.array([99.0, 112.0, 120.0])  # labels 2, 5, 3
    rb = RuleBase([FuzzyRule((2, 5, 3), 77.0, 1.0), FuzzyRule((1, 1, 1), 1.0, 1.0)], 3)
    assert forecast_one_step(x, theta, rb) == 77.0


def test_one_step_empty_rule_base():
    _, theta = constant_model()
    with pytest.raises(EmptyRuleBase):
        forecast_one_step(np.full(10, 50.0), theta, RuleBase([], 10))


def test_constant_window_is_fixed_point():
    rules, theta = constant_model()
    for policy in ("expanding", "window-std", "strict"):
        path = multi_step_forecast(Window(np.full(10, 50.0)), 10, rules, theta, ForecastConfig(garch_fallback=policy))
        assert path.predictions.tolist() == [50.0] * 10
        assert all(d.width_fallback for d in path.diagnostics)
        assert all(p.half_width == 1.0 for p in path.step_params)
        assert path.step_volatility.tolist() == [0.0] * 10


def test_single_step_equals_one_step(series, trained):
    W = 5
    end = 500
    theta = theta_for_window(series, end, W)
    win = Window(series[end - W + 1 : end + 1], end)
    path = multi_step_forecast(win, 1, trained.rules, theta, trained.cfg, history=series[: end + 1])
    assert path.predictions[0] == forecast_one_step(win, theta, trained.rules)


@pytest.mark.parametrize("policy", ["expanding", "window-std", "strict"])
def test_theta_tracks_window(series, trained, policy):
    W, end, n = 5, 520, 15
    cfg = ForecastConfig(window_length=W, garch_fallback=policy)
    theta = theta_for_window(series, end, W)
    win = series[end - W + 1 : end + 1]
    path = multi_step_forecast(win, n, trained.rules, theta, cfg, history=series[: end + 1])
    buf = list(win)
    for i, (y, params, d) in enumerate(zip(path.predictions, path.step_params, path.diagnostics), start=1):
        buf = buf[1:] + [y]
        mean = float(np.mean(buf))
        assert d.window_mean == mean
        sig = path.step_volatility[i - 1]
        assert sig == mean * math.sqrt(d.sigma2) / 100
        width = 1.0 if d.width_fallback else sig
        assert d.width_fallback == (sig == 0.0)
        assert params.half_width == width
        assert params.centers == tuple(mean + k * width for k in (-2, -1, 0, 1, 2))
    assert list(path.theta) == list(range(end - W + 1 + n, end + 1 + n))


def test_policy_sources(series, trained):
    end = 520
    theta = theta_for_window(series, end, 5)
    win = series[end - 4 : end + 1]
    sources = {}
    for policy in ("expanding", "window-std", "strict"):
        cfg = ForecastConfig(window_length=5, garch_fallback=policy)
        path = multi_step_forecast(win, 3, trained.rules, theta, cfg, history=series[: end + 1])
        sources[policy] = {d.volatility_source for d in path.diagnostics}
    assert sources["expanding"] == {"garch-expanding"}
    assert sources["window-std"] == {"window-std"}
    # 4 returns is far below the MLE guard, so strict falls back
    assert sources["strict"] == {"window-std"}


def test_expanding_iterates_variance_recursion(series, trained):
    from garch_fis.garch import fit_garch
    from garch_fis.timeseries import compute_returns

    end = 520
    hist = series[: end + 1]
    path = trained(hist, 4)
    fit = fit_garch(compute_returns(hist))
    p = fit.params
    s2 = fit.sigma2_forecast
    prev = hist[-1]
    for y, d in zip(path.predictions, path.diagnostics):
        assert d.sigma2 == s2
        r = (y - prev) / prev * 100
        s2 = p.omega + p.alpha * (r - p.mu) ** 2 + p.beta * s2
        prev = y


def test_determinism(series, trained):
    a = trained(series[:530], 12)
    b = trained(series[:530].copy(), 12)
    assert a.predictions.tobytes() == b.predictions.tobytes()
    assert a.step_volatility.tobytes() == b.step_volatility.tobytes()


def test_non_leakage_by_mutation(series, trained):
    rng = np.random.default_rng(0)
    base = rolling_backtest(series, 0.8, 5, 8, forecaster=trained, max_origins=15)
    for origin, path in zip(base.origins, base.paths):
        corrupted = series.copy()
        corrupted[origin + 1 :] = rng.uniform(1, 1000, corrupted.size - origin - 1)
        again = rolling_backtest(corrupted, 0.8, 5, 8, origins=[origin])
        assert again.predictions[0].tobytes() == path.predictions.tobytes()


def test_normalized_mode_width_in_model_units(series):
    cfg = ForecastConfig(window_length=5, normalize=True)
    fc = fit_forecaster(series[:480], cfg)
    assert fc.stats == fit_normalization(series[:480])
    hist = series[:500]
    path = fc(hist, 6)
    assert np.all(np.isfinite(path.predictions))
    for params, d in zip(path.step_params, path.diagnostics):
        raw_mean = d.window_mean * fc.stats.stddev + fc.stats.mean
        assert params.half_width == pytest.approx(raw_mean * math.sqrt(d.sigma2) / 100 / fc.stats.stddev, rel=1e-12)
    # reported volatility is back in price units
    np.testing.assert_allclose(path.step_volatility, [p.half_width * fc.stats.stddev for p in path.step_params])


def test_backtest_oracle_stub_has_zero_error(series):
    def oracle(history, n):
        t = history.size - 1
        return series[t + 1 : t + 1 + n]

    res = rolling_backtest(series, 0.8, 10, 7, forecaster=oracle)
    assert np.all(res.mae_by_step == 0.0)
    assert res.metrics.mae == 0.0 and res.metrics.r2 == 1.0


def test_backtest_persistence_constant_and_ramp():
    const = np.full(200, 7.0)
    res = rolling_backtest(const, 0.8, 5, 6, forecaster=BaselineForecaster(BaselineKind.PERSISTENCE, 5))
    assert np.all(res.mae_by_step == 0.0)
    ramp = np.arange(1.0, 301.0)
    res = rolling_backtest(ramp, 0.8, 5, 10, forecaster=BaselineForecaster(BaselineKind.PERSISTENCE, 5))
    assert res.mae_by_step.tolist() == [float(i) for i in range(1, 11)]


def test_backtest_origins_and_short_partition(series):
    res = rolling_backtest(series, 0.8, 10, 5, forecaster=BaselineForecaster(BaselineKind.PERSISTENCE, 10))
    cut = 480
    assert res.origins[0] == cut + 9 and res.origins[-1] == 600 - 1 - 5
    with pytest.raises(TestPartitionTooShort):
        rolling_backtest(series[:100], 0.8, 10, 15)


def test_consequents_cap_out_of_sample_trend():
    # Rule consequents are training-range prices, so a trend that leaves the
    # training range cannot be followed when a rule fires.
    prices, _ = trend_with_garch_noise(500, seed=1)
    fc = fit_forecaster(prices[:400], ForecastConfig(window_length=10))
    top = fc.rules.consequents.max()
    res = rolling_backtest(prices, 0.8, 10, 20, forecaster=fc, max_origins=20)
    for path in res.paths:
        for y, d in zip(path.predictions, path.diagnostics):
            if d.fis_fired:
                assert y <= top + 1e-9
