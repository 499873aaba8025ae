"""Price and return series, windows and z-score normalization.

Rows are treated as a gapless integer sequence: weekends and holidays are
simply absent from the input, so index ``k`` is the ``k``-th observation,
not a calendar day.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    EmptyOrSingleton,
    NonFiniteValue,
    NonPositivePrice,
    WindowTooShort,
    ZeroVariance,
)

__all__ = [
    "PriceSeries",
    "ReturnSeries",
    "Window",
    "NormalizationStats",
    "compute_returns",
    "reconstruct_prices",
    "fit_normalization",
    "zscore",
    "denormalize",
    "window_stats",
]

MIN_WINDOW = 3


def _frozen_array(values: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PriceSeries:
    """Strictly positive price levels indexed ``start, start+1, ...``."""

    values: np.ndarray
    start: int = 0
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        arr = _frozen_array(self.values)
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise NonFiniteValue(f"price at position {bad} is not finite")
        if arr.size and np.any(arr <= 0):
            bad = int(np.flatnonzero(arr <= 0)[0])
            raise NonPositivePrice(f"price at position {bad} is {arr[bad]!r}; prices must be > 0")
        if self.labels is not None and len(self.labels) != arr.size:
            raise ValueError("labels must have one entry per price")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def index(self) -> np.ndarray:
        return np.arange(self.start, self.start + len(self), dtype=np.int64)

    def head(self, n: int) -> PriceSeries:
        labels = None if self.labels is None else self.labels[:n]
        return PriceSeries(self.values[:n], self.start, labels)

    def tail_from(self, k: int) -> PriceSeries:
        labels = None if self.labels is None else self.labels[k:]
        return PriceSeries(self.values[k:], self.start + k, labels)


@dataclass(frozen=True)
class ReturnSeries:
    """Percent returns; ``values[k]`` is the change from price ``k`` to ``k+1``."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _frozen_array(self.values)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue("returns must be finite")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class Window:
    """``length`` consecutive observations ending at time index ``end``."""

    contents: np.ndarray
    end: int = 0

    def __post_init__(self) -> None:
        arr = _frozen_array(self.contents)
        if arr.size < MIN_WINDOW:
            raise WindowTooShort(f"window length must be >= {MIN_WINDOW}, got {arr.size}")
        object.__setattr__(self, "contents", arr)

    @property
    def length(self) -> int:
        return int(self.contents.size)

    @property
    def index(self) -> np.ndarray:
        return np.arange(self.end - self.length + 1, self.end + 1, dtype=np.int64)

    @classmethod
    def from_series(cls, prices: PriceSeries | np.ndarray, end: int, length: int) -> Window:
        """Slice the ``length`` values ending at position ``end`` (inclusive)."""
        values = prices.values if isinstance(prices, PriceSeries) else np.asarray(prices)
        start = 0 if not isinstance(prices, PriceSeries) else prices.start
        pos = end - start
        if pos - length + 1 < 0 or pos >= len(values):
            raise WindowTooShort(f"cannot take a window of {length} ending at index {end}")
        return cls(values[pos - length + 1 : pos + 1], end)


@dataclass(frozen=True)
class NormalizationStats:
    mean: float
    stddev: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.stddev) and self.stddev > 0):
            raise ZeroVariance(f"normalization stddev must be > 0, got {self.stddev!r}")

    def to_dict(self) -> dict[str, float]:
        return {"mean": float(self.mean), "stddev": float(self.stddev)}

    @classmethod
    def from_dict(cls, data: dict) -> NormalizationStats:
        return cls(float(data["mean"]), float(data["stddev"]))


def compute_returns(prices: PriceSeries | Sequence[float] | np.ndarray) -> ReturnSeries:
    """Percent returns ``(P[k+1] - P[k]) / P[k] * 100``.

    Raises
    ------
    EmptyOrSingleton
        Fewer than two prices.
    NonPositivePrice
        Any price is zero or negative.
    """
    if not isinstance(prices, PriceSeries):
        prices = PriceSeries(np.asarray(prices, dtype=np.float64))
    p = prices.values
    if p.size < 2:
        raise EmptyOrSingleton(f"need at least 2 prices to form returns, got {p.size}")
    return ReturnSeries((p[1:] - p[:-1]) / p[:-1] * 100.0)


def reconstruct_prices(first_price: float, returns: ReturnSeries | np.ndarray) -> np.ndarray:
    """Inverse of :func:`compute_returns` given the initial price."""
    r = returns.values if isinstance(returns, ReturnSeries) else np.asarray(returns)
    growth = np.concatenate(([1.0], np.cumprod(1.0 + r / 100.0)))
    return first_price * growth


def fit_normalization(values: Sequence[float] | np.ndarray) -> NormalizationStats:
    """Mean and sample standard deviation of the training partition."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        raise EmptyOrSingleton("normalization needs at least 2 values")
    return NormalizationStats(float(arr.mean()), float(arr.std(ddof=1)))


def zscore(values: Sequence[float] | np.ndarray, stats: NormalizationStats) -> np.ndarray:
    if not stats.stddev > 0:
        raise ZeroVariance("stddev must be > 0")
    return (np.asarray(values, dtype=np.float64) - stats.mean) / stats.stddev


def denormalize(values: Sequence[float] | np.ndarray, stats: NormalizationStats) -> np.ndarray:
    return np.asarray(values, dtype=np.float64) * stats.stddev + stats.mean


def window_stats(win: Window | Sequence[float] | np.ndarray) -> tuple[float, float]:
    """Moving average and sample (``W - 1``) standard deviation of a window.

    A constant window yields a standard deviation of exactly ``0.0``; callers
    substitute their own fallback width.
    """
    x = win.contents if isinstance(win, Window) else np.asarray(win, dtype=np.float64)
    if x.size < 2:
        raise WindowTooShort(f"window_stats needs at least 2 values, got {x.size}")
    mean = float(x.mean())
    if np.all(x == x[0]):
        return float(x[0]), 0.0
    return mean, float(x.std(ddof=1))
