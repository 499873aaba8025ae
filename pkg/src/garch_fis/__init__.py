"""GARCH-driven adaptive fuzzy inference for recursive multi-step price forecasting."""

from .errors import GarchFisError
from .evaluation import BaselineKind, baseline_forecast, grid_search_window
from .fis import (
    MembershipParams,
    ParamSet,
    RuleBase,
    build_membership_params,
    fis_infer,
    fuzzify_label,
    triangular_membership,
    wm_train,
)
from .forecaster import (
    ForecastConfig,
    ForecastPath,
    GarchFisForecaster,
    fit_forecaster,
    forecast_one_step,
    multi_step_forecast,
    rolling_backtest,
)
from .garch import GarchFit, GarchParams, fit_garch, garch_loglik, price_volatility
from .metrics import MetricsReport, mae, mape, r2
from .timeseries import NormalizationStats, PriceSeries, Window, compute_returns, denormalize, window_stats, zscore

__version__ = "0.1.0"

__all__ = [
    "GarchFisError",
    "PriceSeries",
    "Window",
    "NormalizationStats",
    "compute_returns",
    "zscore",
    "denormalize",
    "window_stats",
    "GarchParams",
    "GarchFit",
    "garch_loglik",
    "fit_garch",
    "price_volatility",
    "MembershipParams",
    "ParamSet",
    "RuleBase",
    "triangular_membership",
    "build_membership_params",
    "fuzzify_label",
    "wm_train",
    "fis_infer",
    "ForecastConfig",
    "ForecastPath",
    "forecast_one_step",
    "multi_step_forecast",
    "fit_forecaster",
    "GarchFisForecaster",
    "rolling_backtest",
    "MetricsReport",
    "mae",
    "mape",
    "r2",
    "BaselineKind",
    "baseline_forecast",
    "grid_search_window",
]
