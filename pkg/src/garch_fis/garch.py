"""GARCH(1,1) with Gaussian innovations on percent returns.

The mean equation is a constant, ``eps_i = r_i - mu``, and the variance
follows ``sigma2_i = omega + alpha * eps_{i-1}**2 + beta * sigma2_{i-1}``.
Estimation maximizes the Gaussian log-likelihood with BFGS in an
unconstrained parameterization that satisfies

    omega > 0, alpha >= 0, beta >= 0, alpha + beta < 1

by construction, so no projection or bound handling is required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.special import expit, logit

from .errors import (
    InsufficientData,
    InvalidParams,
    NonPositiveInitialVariance,
    NonPositiveMean,
    OptimizationFailure,
)
from .timeseries import ReturnSeries

__all__ = [
    "GarchParams",
    "GarchFit",
    "conditional_variance",
    "garch_loglik",
    "fit_garch",
    "next_variance",
    "iterate_expected_variance",
    "price_volatility",
    "simulate_garch",
    "MIN_OBSERVATIONS",
    "STATIONARITY_MARGIN",
]

LOG_2PI = math.log(2.0 * math.pi)
MIN_OBSERVATIONS = 20
STATIONARITY_MARGIN = 0.999
VARIANCE_FLOOR = 1e-12
DEFAULT_START = (0.1, 0.8)

VolScaling = Literal["eq6", "alg3"]


@dataclass(frozen=True)
class GarchParams:
    mu: float
    omega: float
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        vals = (self.mu, self.omega, self.alpha, self.beta)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParams(f"non-finite GARCH parameters: {vals}")
        if not self.omega > 0:
            raise InvalidParams(f"omega must be > 0, got {self.omega}")
        if self.alpha < 0 or self.beta < 0:
            raise InvalidParams(f"alpha and beta must be >= 0, got {self.alpha}, {self.beta}")
        if not self.alpha + self.beta < 1:
            raise InvalidParams(f"alpha + beta must be < 1, got {self.alpha + self.beta}")

    @property
    def persistence(self) -> float:
        return self.alpha + self.beta

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.alpha - self.beta)

    def to_dict(self) -> dict[str, float]:
        return {"mu": self.mu, "omega": self.omega, "alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_dict(cls, data: dict) -> GarchParams:
        return cls(float(data["mu"]), float(data["omega"]), float(data["alpha"]), float(data["beta"]))


@dataclass(frozen=True)
class GarchFit:
    """Result of :func:`fit_garch`.

    ``cond_variance[i]`` is the conditional variance of ``returns[i]``;
    ``sigma2_forecast`` is the one-step-ahead variance past the last return.
    """

    params: GarchParams
    cond_variance: np.ndarray
    residuals: np.ndarray
    loglik: float
    initial_loglik: float
    initial_variance: float
    sigma2_forecast: float
    converged: bool
    n_iter: int
    restarts: int

    @property
    def nobs(self) -> int:
        return int(self.cond_variance.size)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "loglik": self.loglik,
            "initial_loglik": self.initial_loglik,
            "initial_variance": self.initial_variance,
            "sigma2_forecast": self.sigma2_forecast,
            "last_sigma2": float(self.cond_variance[-1]),
            "last_residual": float(self.residuals[-1]),
            "nobs": self.nobs,
            "converged": self.converged,
            "n_iter": self.n_iter,
            "restarts": self.restarts,
        }


def _as_array(returns: ReturnSeries | np.ndarray) -> np.ndarray:
    if isinstance(returns, ReturnSeries):
        return returns.values
    return np.asarray(returns, dtype=np.float64)


def _variance_path(mu, omega, alpha, beta, r, initial_variance):
    eps = r - mu
    sigma2 = np.empty_like(r)
    sigma2[0] = initial_variance
    if r.size > 1:
        drive = omega + alpha * eps[:-1] ** 2
        sigma2[1:] = lfilter([1.0], [1.0, -beta], drive, zi=[beta * initial_variance])[0]
    return eps, sigma2


def conditional_variance(
    params: GarchParams, returns: ReturnSeries | np.ndarray, initial_variance: float
) -> tuple[np.ndarray, np.ndarray]:
    """Residuals and conditional variances over ``returns``.

    ``sigma2[0]`` is ``initial_variance``; every later entry is at least
    ``omega``.
    """
    if not initial_variance > 0:
        raise NonPositiveInitialVariance(f"initial variance must be > 0, got {initial_variance}")
    r = _as_array(returns)
    return _variance_path(params.mu, params.omega, params.alpha, params.beta, r, initial_variance)


def _loglik_terms(eps: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
    return -0.5 * (LOG_2PI + np.log(sigma2) + eps**2 / sigma2)


def garch_loglik(
    params: GarchParams, returns: ReturnSeries | np.ndarray, initial_variance: float
) -> float:
    """Gaussian log-likelihood of ``returns`` under ``params``."""
    if not isinstance(params, GarchParams):
        raise InvalidParams("params must be a GarchParams instance")
    r = _as_array(returns)
    if r.size < 2:
        raise InsufficientData("log-likelihood needs at least 2 returns")
    eps, sigma2 = conditional_variance(params, r, initial_variance)
    return float(np.sum(_loglik_terms(eps, sigma2)))


def next_variance(params: GarchParams, residual: float, sigma2: float) -> float:
    """One application of the variance recursion."""
    return params.omega + params.alpha * residual * residual + params.beta * sigma2


def iterate_expected_variance(params: GarchParams, sigma2: float, steps: int) -> np.ndarray:
    """Multi-step variance expectations, replacing ``eps**2`` by its expectation.

    Converges to ``omega / (1 - alpha - beta)``.
    """
    out = np.empty(steps)
    s = sigma2
    for k in range(steps):
        s = params.omega + (params.alpha + params.beta) * s
        out[k] = s
    return out


# -- estimation ---------------------------------------------------------------


def _to_natural(z: np.ndarray) -> tuple[float, float, float, float]:
    mu, a, b, c = z
    omega = math.exp(min(max(a, -60.0), 30.0))
    s = STATIONARITY_MARGIN * float(expit(c))
    g = float(expit(b))
    return float(mu), omega, s * g, s * (1.0 - g)


def _to_unconstrained(mu: float, omega: float, alpha: float, beta: float) -> np.ndarray:
    s = (alpha + beta) / STATIONARITY_MARGIN
    return np.array([mu, math.log(omega), float(logit(alpha / (alpha + beta))), float(logit(s))])


def _neg_mean_loglik(z: np.ndarray, r: np.ndarray, initial_variance: float) -> float:
    mu, omega, alpha, beta = _to_natural(z)
    eps, sigma2 = _variance_path(mu, omega, alpha, beta, r, initial_variance)
    if not np.all(sigma2 > 0):
        return math.inf
    val = -float(np.mean(_loglik_terms(eps, sigma2)))
    return val if math.isfinite(val) else math.inf


def _starting_points(mean: float, var: float, seed: int, max_restarts: int):
    a0, b0 = DEFAULT_START
    yield mean, var * (1.0 - a0 - b0), a0, b0
    rng = np.random.default_rng(seed)
    for _ in range(max_restarts):
        a = float(rng.uniform(0.02, 0.3))
        b = float(rng.uniform(0.3, 0.95 - a))
        m = mean + float(rng.normal(0.0, 0.1)) * math.sqrt(var)
        yield m, var * (1.0 - a - b), a, b


def fit_garch(
    returns: ReturnSeries | np.ndarray,
    *,
    seed: int = 0,
    max_restarts: int = 3,
    min_obs: int = MIN_OBSERVATIONS,
    gtol: float = 1e-6,
    maxiter: int = 200,
) -> GarchFit:
    """Maximum-likelihood GARCH(1,1) fit with BFGS.

    The recursion is seeded with the sample variance of ``returns``. The
    optimizer starts at ``mu`` = sample mean, ``(alpha, beta) = (0.1, 0.8)``
    and ``omega`` matching the sample variance; if the objective is not
    finite there, up to ``max_restarts`` perturbed starts drawn from
    ``seed`` are tried.

    Raises
    ------
    InsufficientData
        Fewer than ``min_obs`` returns, or returns with zero variance.
    OptimizationFailure
        The objective is non-finite at every start.
    """
    r = _as_array(returns)
    if r.size < min_obs:
        raise InsufficientData(f"GARCH MLE needs at least {min_obs} returns, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise OptimizationFailure("returns contain non-finite values")
    mean = float(r.mean())
    var = float(r.var(ddof=1))
    if not var > VARIANCE_FLOOR:
        raise InsufficientData("returns have zero variance; the likelihood is unbounded")
    v0 = max(var, VARIANCE_FLOOR)

    for attempt, start in enumerate(_starting_points(mean, var, seed, max_restarts)):
        z0 = _to_unconstrained(*start)
        f0 = _neg_mean_loglik(z0, r, v0)
        if not math.isfinite(f0):
            continue
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            res = minimize(
                _neg_mean_loglik,
                z0,
                args=(r, v0),
                method="BFGS",
                options={"gtol": gtol, "maxiter": maxiter},
            )
        z_best, f_best = (res.x, float(res.fun)) if math.isfinite(res.fun) and res.fun <= f0 else (z0, f0)
        if not math.isfinite(f_best):
            continue
        params = GarchParams(*_to_natural(z_best))
        eps, sigma2 = conditional_variance(params, r, v0)
        loglik = float(np.sum(_loglik_terms(eps, sigma2)))
        initial = GarchParams(*_to_natural(z0))
        init_ll = garch_loglik(initial, r, v0)
        if loglik < init_ll:
            # mean-vs-sum rounding can flip a near-zero improvement
            params, eps, sigma2, loglik = initial, *conditional_variance(initial, r, v0), init_ll
        return GarchFit(
            params=params,
            cond_variance=sigma2,
            residuals=eps,
            loglik=loglik,
            initial_loglik=init_ll,
            initial_variance=v0,
            sigma2_forecast=next_variance(params, float(eps[-1]), float(sigma2[-1])),
            converged=bool(res.success),
            n_iter=int(res.nit),
            restarts=attempt,
        )
    raise OptimizationFailure("GARCH log-likelihood was non-finite at every starting point")


# -- conversions and simulation -------------------------------------------------


def price_volatility(sigma2: float, window_mean: float, scaling: VolScaling = "eq6") -> float:
    """Convert a percent-return variance into price units around ``window_mean``.

    ``"eq6"`` divides the percent volatility by 100. ``"alg3"`` divides it
    by ``sqrt(100)`` instead, reproducing the alternative scaling written in
    the multi-step prediction pseudo-code; it is kept for comparison only.
    """
    if not window_mean > 0:
        raise NonPositiveMean(f"window mean must be > 0, got {window_mean}")
    if sigma2 < 0:
        raise ValueError(f"variance must be >= 0, got {sigma2}")
    if scaling == "eq6":
        divisor = 100.0
    elif scaling == "alg3":
        divisor = math.sqrt(100.0)
    else:
        raise ValueError(f"unknown volatility scaling {scaling!r}")
    return window_mean * math.sqrt(sigma2) / divisor


def simulate_garch(
    params: GarchParams, n: int, seed: int = 0, burn: int = 500
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate ``n`` percent returns and their conditional variances."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n + burn)
    r = np.empty(n + burn)
    sigma2 = np.empty(n + burn)
    s = params.unconditional_variance
    eps_prev = 0.0
    for i in range(n + burn):
        if i:
            s = params.omega + params.alpha * eps_prev**2 + params.beta * s
        sigma2[i] = s
        eps_prev = math.sqrt(s) * z[i]
        r[i] = params.mu + eps_prev
    return r[burn:], sigma2[burn:]
