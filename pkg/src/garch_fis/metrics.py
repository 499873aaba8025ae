"""Point-forecast error metrics: MAE, MAPE and the coefficient of determination."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConstantActual, Empty, LengthMismatch, ZeroActual

__all__ = ["MetricsReport", "mae", "mape", "r2", "evaluate"]

ArrayLike = Sequence[float] | np.ndarray


def _pair(pred: ArrayLike, actual: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64).reshape(-1)
    a = np.asarray(actual, dtype=np.float64).reshape(-1)
    if p.size != a.size:
        raise LengthMismatch(f"pred has {p.size} values, actual has {a.size}")
    if p.size == 0:
        raise Empty("metrics need at least one value")
    return p, a


def mae(pred: ArrayLike, actual: ArrayLike) -> float:
    p, a = _pair(pred, actual)
    return float(np.mean(np.abs(p - a)))


def mape(pred: ArrayLike, actual: ArrayLike) -> float:
    """Mean absolute percentage error, in percent."""
    p, a = _pair(pred, actual)
    if np.any(a == 0):
        raise ZeroActual("MAPE is undefined when an actual value is 0")
    return float(100.0 * np.mean(np.abs((p - a) / a)))


def r2(pred: ArrayLike, actual: ArrayLike) -> float:
    """``1 - SSE / SST``; negative when worse than predicting the mean."""
    p, a = _pair(pred, actual)
    if a.size < 2:
        raise Empty("R^2 needs at least two values")
    sst = float(np.sum((a - a.mean()) ** 2))
    if sst == 0.0:
        raise ConstantActual("R^2 is undefined for a constant actual series")
    sse = float(np.sum((p - a) ** 2))
    return 1.0 - sse / sst


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    mape: float
    r2: float  # NaN when the actual series is constant
    n_samples: int

    def to_dict(self) -> dict:
        def _num(v: float) -> float | None:
            return None if math.isnan(v) else v

        return {"mae": self.mae, "mape": _num(self.mape), "r2": _num(self.r2), "n_samples": self.n_samples}


def evaluate(pred: ArrayLike, actual: ArrayLike) -> MetricsReport:
    p, a = _pair(pred, actual)
    try:
        r2_value = r2(p, a)
    except (ConstantActual, Empty):
        r2_value = math.nan
    try:
        mape_value = mape(p, a)
    except ZeroActual:
        mape_value = math.nan
    return MetricsReport(mae(p, a), mape_value, r2_value, int(p.size))
