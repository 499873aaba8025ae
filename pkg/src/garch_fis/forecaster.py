"""Recursive rolling multi-step forecasting with volatility-driven partitions.

Each step of :func:`multi_step_forecast`

1. predicts the next price with the fixed rule base,
2. obtains a one-step return variance for the current window,
3. appends the prediction to the window and drops the oldest value,
4. converts the variance into a price volatility around the new window mean,
5. appends membership parameters built from (mean, volatility) to the
   parameter set and drops its oldest entry.

Nothing after the forecast origin is ever read: the window and the GARCH
state only see true prices up to the origin and earlier predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Protocol, Sequence

import numpy as np

from .errors import (
    DataError,
    InsufficientData,
    LengthMismatch,
    NonPositiveMean,
    NumericalError,
    TestPartitionTooShort,
)
from .fis import MembershipParams, ParamSet, RuleBase, build_membership_params, fis_infer, theta_for_window, wm_train
from .garch import GarchParams, MIN_OBSERVATIONS, fit_garch, next_variance, price_volatility
from .metrics import MetricsReport, evaluate
from .timeseries import NormalizationStats, PriceSeries, Window, compute_returns, denormalize, fit_normalization, zscore

__all__ = [
    "GarchFallback",
    "ForecastConfig",
    "StepDiagnostics",
    "ForecastPath",
    "forecast_one_step",
    "multi_step_forecast",
    "GarchFisForecaster",
    "fit_forecaster",
    "BacktestResult",
    "rolling_backtest",
    "split_point",
]

GarchFallback = Literal["expanding", "window-std", "strict"]
VolScaling = Literal["eq6", "alg3"]


@dataclass(frozen=True)
class ForecastConfig:
    window_length: int = 10
    horizon: int = 1
    garch_fallback: GarchFallback = "expanding"
    vol_scaling: VolScaling = "eq6"
    normalize: bool = False
    seed: int = 0
    min_garch_obs: int = MIN_OBSERVATIONS

    def __post_init__(self) -> None:
        if self.window_length < 3:
            raise ValueError(f"window_length must be >= 3, got {self.window_length}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.garch_fallback not in ("expanding", "window-std", "strict"):
            raise ValueError(f"unknown garch_fallback {self.garch_fallback!r}")
        if self.vol_scaling not in ("eq6", "alg3"):
            raise ValueError(f"unknown vol_scaling {self.vol_scaling!r}")


@dataclass(frozen=True)
class StepDiagnostics:
    """What produced each step.

    ``volatility_source`` is one of ``"garch-expanding"``, ``"garch-window"``,
    ``"window-std"`` or ``"none"``; ``width_fallback`` marks steps where the
    price volatility was not positive and the unit half-width was used.
    """

    step: int
    volatility_source: str
    garch_ok: bool
    fis_fired: bool
    width_fallback: bool
    sigma2: float
    window_mean: float
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "volatility_source": self.volatility_source,
            "garch_ok": self.garch_ok,
            "fis_fired": self.fis_fired,
            "width_fallback": self.width_fallback,
            "sigma2": self.sigma2,
            "window_mean": self.window_mean,
            "note": self.note,
        }


@dataclass(frozen=True)
class ForecastPath:
    predictions: np.ndarray
    step_volatility: np.ndarray
    diagnostics: tuple[StepDiagnostics, ...] = ()
    step_params: tuple[MembershipParams, ...] = ()
    theta: ParamSet | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        pred = np.array(self.predictions, dtype=np.float64).reshape(-1)
        vol = np.array(self.step_volatility, dtype=np.float64).reshape(-1)
        if pred.size != vol.size:
            raise LengthMismatch("predictions and step_volatility must have equal length")
        if not np.all(np.isfinite(pred)):
            raise ValueError("forecast path contains non-finite predictions")
        pred.flags.writeable = False
        vol.flags.writeable = False
        object.__setattr__(self, "predictions", pred)
        object.__setattr__(self, "step_volatility", vol)

    def __len__(self) -> int:
        return int(self.predictions.size)


def forecast_one_step(window: Window | np.ndarray, theta: ParamSet, rules: RuleBase) -> float:
    x = window.contents if isinstance(window, Window) else np.asarray(window, dtype=np.float64)
    return fis_infer(x, theta, rules)


def _window_std_variance(raw_window: np.ndarray) -> float:
    r = compute_returns(raw_window).values
    return float(np.var(r, ddof=1)) if r.size >= 2 else 0.0


class _ExpandingGarch:
    """GARCH fitted once on true returns up to the origin, then iterated forward."""

    def __init__(self, raw_history: np.ndarray, cfg: ForecastConfig):
        self.params: GarchParams | None = None
        self.error = ""
        try:
            fit = fit_garch(compute_returns(raw_history), seed=cfg.seed, min_obs=cfg.min_garch_obs)
        except (NumericalError, DataError) as exc:
            self.error = f"{type(exc).__name__}: {exc}"
            return
        self.params = fit.params
        self.sigma2 = fit.sigma2_forecast
        self.last_price = float(raw_history[-1])

    def advance(self, raw_price: float) -> None:
        r = (raw_price - self.last_price) / self.last_price * 100.0
        self.sigma2 = next_variance(self.params, r - self.params.mu, self.sigma2)
        self.last_price = raw_price


def multi_step_forecast(
    window: Window | np.ndarray,
    n: int,
    rules: RuleBase,
    theta: ParamSet,
    cfg: ForecastConfig | None = None,
    *,
    history: np.ndarray | None = None,
    stats: NormalizationStats | None = None,
) -> ForecastPath:
    """Recursive ``n``-step forecast from ``window``.

    Parameters
    ----------
    window
        The ``W`` most recent values, in model units (z-scores when
        ``stats`` is given, raw prices otherwise).
    n
        Number of recursive steps.
    rules, theta
        Trained rule base and the parameter set covering ``window``.
    cfg
        Volatility policy and scaling; defaults to :class:`ForecastConfig`.
    history
        Raw prices up to and including the origin. Only the ``"expanding"``
        policy uses more than the window; without it the window alone is
        the history.
    stats
        Normalization applied to ``window``. GARCH always runs on raw
        prices; the resulting price volatility is rescaled into model units.

    Returns
    -------
    ForecastPath
        Predictions and price volatilities in model units.
    """
    cfg = cfg or ForecastConfig()
    x = window.contents if isinstance(window, Window) else np.asarray(window, dtype=np.float64)
    W = x.size
    if len(theta) != W:
        raise LengthMismatch(f"theta covers {len(theta)} indices, window has {W}")
    if n < 1:
        raise ValueError("n must be >= 1")

    def to_raw(v):
        return denormalize(v, stats) if stats is not None else np.asarray(v, dtype=np.float64)

    win = np.array(x, dtype=np.float64)
    raw_hist = np.asarray(history, dtype=np.float64) if history is not None else to_raw(win)
    expanding = _ExpandingGarch(raw_hist, cfg) if cfg.garch_fallback == "expanding" else None

    preds, vols, diags, new_params = [], [], [], []
    for step in range(1, n + 1):
        y, fired = fis_infer(win, theta, rules, return_fired=True)
        if not math.isfinite(y):
            y, fired = float(win[-1]), False

        note = ""
        garch_ok = False
        if expanding is not None and expanding.params is not None:
            sigma2, source, garch_ok = expanding.sigma2, "garch-expanding", True
        else:
            sigma2, source = None, "window-std"
            if expanding is not None:
                note = expanding.error
            elif cfg.garch_fallback == "strict":
                try:
                    fit = fit_garch(compute_returns(to_raw(win)), seed=cfg.seed, min_obs=cfg.min_garch_obs)
                    sigma2, source, garch_ok = fit.sigma2_forecast, "garch-window", True
                except (NumericalError, DataError) as exc:
                    note = f"{type(exc).__name__}: {exc}"
            if sigma2 is None:
                try:
                    sigma2 = _window_std_variance(to_raw(win))
                except DataError as exc:
                    sigma2, source = 0.0, "none"
                    note = f"{note}; {type(exc).__name__}: {exc}".lstrip("; ")

        win = np.append(win[1:], y)
        mean = float(win.mean())
        raw_mean = float(to_raw(mean))
        try:
            sigma_hat = price_volatility(sigma2, raw_mean, cfg.vol_scaling)
        except NonPositiveMean as exc:
            sigma_hat = 0.0
            note = f"{note}; {exc}".lstrip("; ")
        if stats is not None:
            sigma_hat = sigma_hat / stats.stddev
        params = build_membership_params(mean, sigma_hat)
        theta = theta.shifted(params)

        if expanding is not None and expanding.params is not None:
            expanding.advance(float(to_raw(y)))

        preds.append(y)
        vols.append(sigma_hat)
        new_params.append(params)
        diags.append(
            StepDiagnostics(
                step=step,
                volatility_source=source,
                garch_ok=garch_ok,
                fis_fired=fired,
                width_fallback=not sigma_hat > 0,
                sigma2=float(sigma2),
                window_mean=mean,
                note=note,
            )
        )
    return ForecastPath(np.array(preds), np.array(vols), tuple(diags), tuple(new_params), theta)


class Forecaster(Protocol):
    def __call__(self, history: np.ndarray, n: int) -> ForecastPath | np.ndarray: ...


@dataclass(frozen=True)
class GarchFisForecaster:
    """Trained rule base bound to a configuration, callable on raw history."""

    rules: RuleBase
    cfg: ForecastConfig
    stats: NormalizationStats | None = None

    def __call__(self, history: np.ndarray, n: int) -> ForecastPath:
        raw = np.asarray(history, dtype=np.float64)
        W = self.cfg.window_length
        model_space = zscore(raw, self.stats) if self.stats is not None else raw
        end = raw.size - 1
        theta = theta_for_window(model_space, end, W)
        window = Window(model_space[-W:], end)
        path = multi_step_forecast(window, n, self.rules, theta, self.cfg, history=raw, stats=self.stats)
        if self.stats is None:
            return path
        return replace(
            path,
            predictions=denormalize(path.predictions, self.stats),
            step_volatility=path.step_volatility * self.stats.stddev,
        )


def fit_forecaster(train_prices: PriceSeries | np.ndarray, cfg: ForecastConfig, h: int = 1) -> GarchFisForecaster:
    """Learn rules on ``train_prices`` (normalized first if ``cfg.normalize``)."""
    raw = train_prices.values if isinstance(train_prices, PriceSeries) else np.asarray(train_prices, dtype=np.float64)
    stats = fit_normalization(raw) if cfg.normalize else None
    series = zscore(raw, stats) if stats is not None else raw
    rules, _ = wm_train(series, cfg.window_length, h)
    return GarchFisForecaster(rules, cfg, stats)


@dataclass(frozen=True)
class BacktestResult:
    """Paths from every origin, aligned with the true continuation.

    ``predictions`` and ``actuals`` have shape ``(n_origins, horizon)``;
    ``mae_by_step[i]`` averages the absolute error of step ``i + 1`` across
    origins.
    """

    origins: np.ndarray
    predictions: np.ndarray
    actuals: np.ndarray
    volatility: np.ndarray
    mae_by_step: np.ndarray
    metrics: MetricsReport
    paths: tuple[ForecastPath, ...] = field(default=(), compare=False)

    @property
    def horizon(self) -> int:
        return int(self.predictions.shape[1])


def split_point(n_obs: int, split: float) -> int:
    """Number of leading observations in the training partition."""
    if not 0 < split < 1:
        raise ValueError(f"split must lie in (0, 1), got {split}")
    return int(math.floor(n_obs * split))


def _as_path(out, n: int) -> ForecastPath:
    if isinstance(out, ForecastPath):
        return out
    pred = np.asarray(out, dtype=np.float64).reshape(-1)
    return ForecastPath(pred, np.zeros(pred.size))


def rolling_backtest(
    prices: PriceSeries | np.ndarray,
    split: float = 0.8,
    window_length: int = 10,
    horizon: int = 1,
    cfg: ForecastConfig | None = None,
    *,
    forecaster: Forecaster | Callable[[np.ndarray, int], object] | None = None,
    origins: Sequence[int] | None = None,
    max_origins: int | None = None,
) -> BacktestResult:
    """Forecast ``horizon`` steps from every test-partition origin.

    Origins are positions ``t`` whose whole window lies in the test partition
    and whose continuation ``t+1 .. t+horizon`` is observed. The forecaster
    receives ``prices[: t + 1]`` and nothing else. Without an explicit
    ``forecaster``, a GARCH-FIS model is trained on the training partition.

    ``max_origins`` keeps that many evenly spaced origins.
    """
    raw = prices.values if isinstance(prices, PriceSeries) else np.asarray(prices, dtype=np.float64)
    cfg = cfg or ForecastConfig(window_length=window_length, horizon=horizon)
    if cfg.window_length != window_length or cfg.horizon != horizon:
        cfg = replace(cfg, window_length=window_length, horizon=horizon)
    T = raw.size
    cut = split_point(T, split)
    if T - cut < window_length + horizon:
        raise TestPartitionTooShort(
            f"test partition has {T - cut} observations, need >= W + n = {window_length + horizon}"
        )
    if forecaster is None:
        forecaster = fit_forecaster(raw[:cut], cfg)

    if origins is None:
        candidates = np.arange(cut + window_length - 1, T - horizon)
        if max_origins is not None and max_origins < candidates.size:
            pick = np.unique(np.round(np.linspace(0, candidates.size - 1, max_origins)).astype(int))
            candidates = candidates[pick]
        origin_arr = candidates
    else:
        origin_arr = np.asarray(list(origins), dtype=np.int64)
        if origin_arr.size == 0:
            raise InsufficientData("no backtest origins")
        if np.any(origin_arr < window_length - 1) or np.any(origin_arr + horizon >= T):
            raise TestPartitionTooShort("an origin lacks a full window or an observed continuation")

    paths = []
    for t in origin_arr:
        history = raw[: t + 1].copy()
        path = _as_path(forecaster(history, horizon), horizon)
        if len(path) != horizon:
            raise LengthMismatch(f"forecaster returned {len(path)} steps, expected {horizon}")
        paths.append(path)
    preds = np.vstack([p.predictions for p in paths])
    vols = np.vstack([p.step_volatility for p in paths])
    actuals = np.vstack([raw[t + 1 : t + 1 + horizon] for t in origin_arr])
    mae_by_step = np.mean(np.abs(preds - actuals), axis=0)
    return BacktestResult(
        origins=origin_arr,
        predictions=preds,
        actuals=actuals,
        volatility=vols,
        mae_by_step=mae_by_step,
        metrics=evaluate(preds.ravel(), actuals.ravel()),
        paths=tuple(paths),
    )
