"""Seeded synthetic price generators for tests and demos."""

from __future__ import annotations

import numpy as np

from .garch import GarchParams, simulate_garch

# unconditional variance 0.025 / (1 - 0.9) = 0.25, i.e. 0.5 % noise
TREND_NOISE_PARAMS = GarchParams(mu=0.0, omega=0.025, alpha=0.1, beta=0.8)


def trend_with_garch_noise(
    n: int = 500,
    slope_pct: float = 0.1,
    start: float = 100.0,
    noise: GarchParams = TREND_NOISE_PARAMS,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Linear trend times ``1 + eta / 100`` with GARCH(1,1) percent noise ``eta``.

    The trend rises by ``slope_pct`` percent of ``start`` per step. Returns
    ``(prices, trend)``; ``trend`` is the noiseless path.
    """
    trend = start * (1.0 + slope_pct / 100.0 * np.arange(n))
    eta, _ = simulate_garch(noise, n, seed=seed)
    return trend * (1.0 + eta / 100.0), trend


def random_walk(n: int = 200, start: float = 100.0, vol_pct: float = 1.0, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return start * np.exp(np.cumsum(rng.normal(0.0, vol_pct / 100.0, n)))
