"""The four forecast error metrics, implemented exactly as printed.

Theil's statistic here is the bounded form: RMSE over the sum of the
root-mean-squares of actual and predicted, which lives in [0, 1].
"""
from __future__ import annotations

import numpy as np

from .errors import DegenerateBaseline, LengthMismatch


def _check(actual, pred):
    a = np.asarray(actual, dtype=float)
    p = np.asarray(pred, dtype=float)
    if a.shape != p.shape or a.ndim != 1:
        raise LengthMismatch(f"shapes {a.shape} vs {p.shape}")
    if len(a) < 1:
        raise LengthMismatch("empty input")
    return a, p


def rmse(actual, pred) -> float:
    a, p = _check(actual, pred)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def smape(actual, pred) -> float:
    """Symmetric MAPE in percent, bounded in [0, 200]."""
    a, p = _check(actual, pred)
    denom = (np.abs(a) + np.abs(p)) / 2.0
    terms = np.zeros(len(a))
    nonzero = denom > 0
    terms[nonzero] = np.abs(a - p)[nonzero] / denom[nonzero]
    return float(100.0 * np.mean(terms))


def mdrae(actual, pred) -> float:
    """Median of |error| relative to the naive no-change forecast error.

    Terms with a zero naive denominator are skipped (their count is
    available via mdrae_detail).
    """
    value, _ = mdrae_detail(actual, pred)
    return value


def mdrae_detail(actual, pred) -> tuple[float, int]:
    a, p = _check(actual, pred)
    if len(a) < 2:
        raise LengthMismatch("mdrae needs >= 2 observations")
    naive = np.abs(a[1:] - a[:-1])
    err = np.abs(a[1:] - p[1:])
    keep = naive > 0
    skipped = int((~keep).sum())
    if not keep.any():
        raise DegenerateBaseline("all naive denominators are zero")
    return float(np.median(err[keep] / naive[keep])), skipped


def theil_u(actual, pred) -> float:
    """RMSE over (rms(actual) + rms(pred)); 0 = perfect, bounded by 1."""
    a, p = _check(actual, pred)
    denom = np.sqrt(np.mean(a ** 2)) + np.sqrt(np.mean(p ** 2))
    if denom == 0:
        return 0.0
    return float(rmse(a, p) / denom)


ALL_METRICS = {
    "rmse": rmse,
    "mdrae": mdrae,
    "smape": smape,
    "theil_u": theil_u,
}


def score_all(actual, pred) -> dict[str, float]:
    return {name: fn(actual, pred) for name, fn in ALL_METRICS.items()}
