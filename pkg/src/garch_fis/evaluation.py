"""Naive baselines and the window-length grid search."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyWindow, SeriesTooShort
from .forecaster import ForecastConfig, ForecastPath, fit_forecaster, rolling_backtest, split_point
from .metrics import MetricsReport
from .timeseries import PriceSeries, Window

__all__ = [
    "BaselineKind",
    "baseline_forecast",
    "BaselineForecaster",
    "GridSearchResult",
    "grid_search_window",
    "PAPER_WINDOW_GRID",
]

PAPER_WINDOW_GRID = (3, 5, 10, 15)


class BaselineKind(str, enum.Enum):
    PERSISTENCE = "persistence"
    MOVING_AVERAGE = "moving-average"


def baseline_forecast(kind: BaselineKind | str, window: Window | Sequence[float] | np.ndarray, n: int) -> ForecastPath:
    """Persistence repeats the last value; moving-average recursively appends its own mean."""
    kind = BaselineKind(kind)
    x = window.contents if isinstance(window, Window) else np.asarray(window, dtype=np.float64)
    if x.size == 0:
        raise EmptyWindow("baseline needs at least one observation")
    if kind is BaselineKind.PERSISTENCE:
        preds = np.full(n, x[-1], dtype=np.float64)
    else:
        buf = list(map(float, x))
        preds = np.empty(n)
        for i in range(n):
            preds[i] = np.mean(buf)
            buf = buf[1:] + [preds[i]]
    return ForecastPath(preds, np.zeros(n))


@dataclass(frozen=True)
class BaselineForecaster:
    """Callable adapter so a baseline plugs into :func:`rolling_backtest`."""

    kind: BaselineKind
    window_length: int

    def __call__(self, history: np.ndarray, n: int) -> ForecastPath:
        return baseline_forecast(self.kind, np.asarray(history)[-self.window_length :], n)


@dataclass(frozen=True)
class GridSearchResult:
    best_window: int
    reports: dict[int, MetricsReport]
    metric: str

    def table(self) -> list[dict]:
        return [{"window": w, **r.to_dict()} for w, r in sorted(self.reports.items())]


_DIRECTION = {"mae": 1.0, "mape": 1.0, "r2": -1.0}


def grid_search_window(
    prices: PriceSeries | np.ndarray,
    candidates: Sequence[int] = PAPER_WINDOW_GRID,
    h: int = 1,
    metric: str = "mae",
    cfg: ForecastConfig | None = None,
    *,
    validation_fraction: float = 0.2,
    forecaster_factory: Callable[[int, np.ndarray], object] | None = None,
) -> GridSearchResult:
    """Choose the window length with the best validation score.

    ``prices`` is the training partition only. Its last
    ``validation_fraction`` becomes the validation split; each candidate is
    trained on the rest and backtested over ``h`` recursive steps. Ties go
    to the smaller window. ``forecaster_factory(W, fit_prices)`` replaces
    GARCH-FIS training when given.
    """
    raw = prices.values if isinstance(prices, PriceSeries) else np.asarray(prices, dtype=np.float64)
    cands = sorted({int(w) for w in candidates})
    if not cands:
        raise ValueError("candidates must be non-empty")
    if metric not in _DIRECTION:
        raise ValueError(f"metric must be one of {sorted(_DIRECTION)}")
    split = 1.0 - validation_fraction
    cut = split_point(raw.size, split)
    if raw.size - cut < max(cands) + h or cut < max(cands) + 1:
        raise SeriesTooShort(
            f"{raw.size} observations cannot fit W = {max(cands)} in both fit and validation splits"
        )
    base = cfg or ForecastConfig()
    reports: dict[int, MetricsReport] = {}
    for W in cands:
        wcfg = ForecastConfig(
            window_length=W,
            horizon=h,
            garch_fallback=base.garch_fallback,
            vol_scaling=base.vol_scaling,
            normalize=base.normalize,
            seed=base.seed,
            min_garch_obs=base.min_garch_obs,
        )
        fc = forecaster_factory(W, raw[:cut]) if forecaster_factory else fit_forecaster(raw[:cut], wcfg)
        reports[W] = rolling_backtest(raw, split, W, h, wcfg, forecaster=fc).metrics

    def score(W: int) -> float:
        v = getattr(reports[W], metric)
        return math.inf if math.isnan(v) else _DIRECTION[metric] * v

    best = min(cands, key=lambda W: (score(W), W))
    return GridSearchResult(best, reports, metric)
