"""Trend/cycle extraction: HP filter and a local-linear-trend state-space model.

These produce the two latent regressors of the Phillips curve designs:
trend inflation (whose one-quarter lead proxies expected inflation) and the
output gap from log GDP.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .errors import DivisionDomain, EstimationFailure, InsufficientHistory
from .quarters import Series

DEFAULT_HP_LAMBDA = 1600.0  # standard quarterly smoothing
_DIFFUSE_PRIOR = 1e7


@dataclass(frozen=True)
class UcmParams:
    """Estimated variances of the local-linear-trend model."""

    var_obs: float     # observation noise
    var_level: float   # level innovation
    var_slope: float   # slope innovation

    def __post_init__(self):
        if self.var_obs < 0 or self.var_level < 0 or self.var_slope < 0:
            raise ValueError("variances must be nonnegative")
        if self.var_obs == 0 and self.var_level == 0 and self.var_slope == 0:
            raise ValueError("at least one variance must be positive")


@dataclass(frozen=True)
class TrendCycleDecomposition:
    """Additive trend + cycle split sharing the input's index."""

    trend: Series
    cycle: Series
    method: str          # "HP" or "UCM"
    params: object = None


def _hp_banded(n: int, lam: float) -> np.ndarray:
    """Banded (upper form) representation of I + lam * D'D for solve_banded."""
    K = np.zeros((n, n))
    D = np.zeros((n - 2, n))
    for i in range(n - 2):
        D[i, i], D[i, i + 1], D[i, i + 2] = 1.0, -2.0, 1.0
    K = np.eye(n) + lam * (D.T @ D)
    ab = np.zeros((5, n))
    for offset in range(-2, 3):
        diag = np.diagonal(K, offset)
        ab[2 - offset, max(offset, 0):max(offset, 0) + len(diag)] = diag
    return ab


def hp_filter(s: Series, lam: float = DEFAULT_HP_LAMBDA) -> TrendCycleDecomposition:
    """Hodrick-Prescott decomposition via the pentadiagonal normal equations."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    n = len(s)
    if n < 4:
        raise InsufficientHistory(f"hp_filter needs length >= 4, got {n}")
    ab = _hp_banded(n, lam)
    trend = linalg.solve_banded((2, 2), ab, s.values)
    return TrendCycleDecomposition(
        trend=Series(s.name + ".trend", s.index, trend, s.units),
        cycle=Series(s.name + ".cycle", s.index, s.values - trend, s.units),
        method="HP",
        params={"lambda": lam},
    )


# --- local-linear-trend Kalman machinery --------------------------------

_T = np.array([[1.0, 1.0], [0.0, 1.0]])
_Z = np.array([1.0, 0.0])


def kalman_loglik(y: np.ndarray, params: UcmParams) -> float:
    """Gaussian log-likelihood by prediction-error decomposition.

    Initialization is a large-variance prior centred on (y_0, 0), an
    approximation to an exact diffuse start.
    """
    q_l, q_b, h = params.var_level, params.var_slope, params.var_obs
    # state (level l, slope b) with symmetric covariance (p11, p12, p22),
    # hand-unrolled because this sits inside the likelihood optimizer
    l, b = float(y[0]), 0.0
    p11 = p22 = _DIFFUSE_PRIOR
    p12 = 0.0
    ll = 0.0
    log2pi = np.log(2.0 * np.pi)
    for yt in y:
        f = p11 + h
        if f <= 0 or not np.isfinite(f):
            return -np.inf
        v = yt - l
        ll -= 0.5 * (log2pi + np.log(f) + v * v / f)
        k1, k2 = p11 / f, p12 / f
        lf, bf = l + k1 * v, b + k2 * v
        f11, f12, f22 = p11 - k1 * p11, p12 - k1 * p12, p22 - k2 * p12
        l, b = lf + bf, bf
        p11 = f11 + 2.0 * f12 + f22 + q_l
        p12 = f12 + f22
        p22 = f22 + q_b
    return float(ll)


def kalman_smooth(y: np.ndarray, params: UcmParams) -> np.ndarray:
    """Fixed-interval (RTS) smoothed states, shape (n, 2): level, slope."""
    n = len(y)
    Q = np.diag([params.var_level, params.var_slope])
    h = params.var_obs
    a_pred = np.zeros((n, 2))
    P_pred = np.zeros((n, 2, 2))
    a_filt = np.zeros((n, 2))
    P_filt = np.zeros((n, 2, 2))
    a = np.array([y[0], 0.0])
    P = np.eye(2) * _DIFFUSE_PRIOR
    for t in range(n):
        a_pred[t], P_pred[t] = a, P
        f = _Z @ P @ _Z + h
        v = y[t] - _Z @ a
        k = P @ _Z / f
        a_filt[t] = a + k * v
        P_filt[t] = P - np.outer(k, _Z @ P)
        a = _T @ a_filt[t]
        P = _T @ P_filt[t] @ _T.T + Q

    a_sm = np.zeros((n, 2))
    a_sm[-1] = a_filt[-1]
    P_sm = P_filt[-1]
    for t in range(n - 2, -1, -1):
        J = P_filt[t] @ _T.T @ np.linalg.pinv(P_pred[t + 1])
        a_sm[t] = a_filt[t] + J @ (a_sm[t + 1] - _T @ a_filt[t])
        P_sm = P_filt[t] + J @ (P_sm - P_pred[t + 1]) @ J.T
    return a_sm


def one_step_errors(y: np.ndarray, params: UcmParams) -> np.ndarray:
    """Standardized one-step-ahead prediction errors (filter innovations)."""
    Q = np.diag([params.var_level, params.var_slope])
    h = params.var_obs
    a = np.array([y[0], 0.0])
    P = np.eye(2) * _DIFFUSE_PRIOR
    out = np.zeros(len(y))
    for t in range(len(y)):
        f = _Z @ P @ _Z + h
        v = y[t] - _Z @ a
        out[t] = v / np.sqrt(f)
        k = P @ _Z / f
        a = a + k * v
        P = P - np.outer(k, _Z @ P)
        a = _T @ a
        P = _T @ P @ _T.T + Q
    return out


_RESTART_LOG_VARS = [
    (0.0, 0.0, 0.0),
    (1.0, -2.0, -4.0),
    (-2.0, 1.0, -1.0),
    (2.0, -4.0, -8.0),
    (-1.0, -1.0, -6.0),
]


def ucm_smooth(s: Series) -> tuple[TrendCycleDecomposition, UcmParams]:
    """Estimate the local-linear-trend model by maximum likelihood and smooth.

    Variances are searched in log space (nonnegativity for free) with a
    Nelder-Mead simplex from 5 dispersed starting points; the best finite
    optimum wins.
    """
    if len(s) < 20:
        raise InsufficientHistory(f"ucm_smooth needs length >= 20, got {len(s)}")
    y = s.values
    scale = max(np.var(np.diff(y)), 1e-8)

    def neg_ll(log_vars):
        if np.any(np.abs(log_vars) > 40):
            return np.inf
        v = np.exp(log_vars) * scale
        return -kalman_loglik(y, UcmParams(v[0], v[1], v[2]))

    best = None
    diagnostics = []
    for start in _RESTART_LOG_VARS:
        res = optimize.minimize(
            neg_ll, np.array(start), method="Nelder-Mead",
            options={"xatol": 1e-6, "fatol": 1e-8, "maxiter": 2000},
        )
        diagnostics.append({"start": start, "fun": float(res.fun), "success": bool(res.success)})
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None or not np.isfinite(best.fun):
        raise EstimationFailure("no finite likelihood found", {"restarts": diagnostics})

    v = np.exp(best.x) * scale
    params = UcmParams(float(v[0]), float(v[1]), float(v[2]))
    level = kalman_smooth(y, params)[:, 0]
    decomp = TrendCycleDecomposition(
        trend=Series(s.name + ".trend", s.index, level, s.units),
        cycle=Series(s.name + ".cycle", s.index, y - level, s.units),
        method="UCM",
        params=params,
    )
    return decomp, params


def trend_of(s: Series, method: str = "UCM", hp_lambda: float = DEFAULT_HP_LAMBDA) -> TrendCycleDecomposition:
    if method.upper() == "HP":
        return hp_filter(s, hp_lambda)
    if method.upper() == "UCM":
        return ucm_smooth(s)[0]
    raise ValueError(f"unknown trend method {method!r}")


def output_gap(gdp: Series, method: str = "UCM", hp_lambda: float = DEFAULT_HP_LAMBDA) -> Series:
    """Percentage-point gap: 100*log(gdp) minus its extracted trend."""
    if np.any(gdp.values <= 0):
        raise DivisionDomain("gdp must be strictly positive")
    log_gdp = Series(gdp.name, gdp.index, 100.0 * np.log(gdp.values))
    decomp = trend_of(log_gdp, method, hp_lambda)
    return Series(gdp.name + ".gap", gdp.index, log_gdp.values - decomp.trend.values, "%")


def expected_inflation(trend_inflation: Series, name: str = "expected_inflation") -> Series:
    """One-quarter lead of the trend; the final row reuses the last trend value.

    The boundary rule keeps a regressor value available at the forecast
    origin without reading past the end of the sample.
    """
    if len(trend_inflation) == 0:
        raise InsufficientHistory("empty trend series")
    values = np.append(trend_inflation.values[1:], trend_inflation.values[-1])
    return Series(name, trend_inflation.index, values, trend_inflation.units)
