"""Windowed conformal prediction intervals around point forecasts.

Scores are absolute residuals normalized by a scale model; the quantile at
each step is the finite-sample conformal order statistic over a sliding
window of past scores, so the interval adapts to recent regimes. The run
is strictly sequential: nothing at step t reads anything after t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ColdStart, ScaleDomain
from .models import DesignMatrix, ForestParams, fit_forest

_MIN_SCALE = 1e-8


@dataclass(frozen=True)
class ConformalConfig:
    kappa: int = 20
    alpha: float = 0.1
    uncertainty: str = "constant"              # constant | residual_forest
    forest_params: ForestParams | None = None

    def __post_init__(self):
        if self.kappa < 2:
            raise ValueError("kappa must be >= 2")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must be in (0, 1)")
        if self.uncertainty not in ("constant", "residual_forest"):
            raise ValueError(f"unknown uncertainty model {self.uncertainty!r}")


@dataclass(frozen=True)
class PredictionInterval:
    t: object
    center: float
    lower: float
    upper: float
    quantile: float
    scale: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def covers(self, actual: float) -> bool:
        return self.lower <= actual <= self.upper


def conformal_scores(actual, pred, scale) -> np.ndarray:
    """Normalized absolute residuals |y - yhat| / scale."""
    a = np.asarray(actual, float)
    p = np.asarray(pred, float)
    s = np.asarray(scale, float)
    if a.shape != p.shape or a.shape != s.shape:
        raise ValueError("length mismatch")
    if np.any(s <= 0):
        raise ScaleDomain("scale must be strictly positive")
    return np.abs(a - p) / s


def windowed_quantile(scores, t: int, kappa: int, alpha: float) -> float:
    """Finite-sample conformal quantile over the most recent scores.

    Uses the m = min(kappa, t-1) scores before position t (0-based: scores
    [t-m, t)); returns the ceil((m+1)(1-alpha))-th smallest, or +inf when
    that order statistic does not exist.
    """
    scores = np.asarray(scores, float)
    m = min(kappa, t)
    if m < 1:
        raise ColdStart("no prior scores in the window")
    window = np.sort(scores[t - m:t])
    r = math.ceil((m + 1) * (1.0 - alpha))
    if r > m:
        return math.inf
    return float(window[r - 1])


def _scales(records, config: ConformalConfig, upto: int) -> float:
    """Scale for record `upto` from strictly earlier records."""
    if config.uncertainty == "constant":
        return 1.0
    earlier = records[:upto]
    if not earlier or not records[upto].features:
        return 1.0
    feats = np.array([r.features for r in earlier])
    resid = np.abs(np.array([r.actual - r.prediction for r in earlier]))
    params = config.forest_params or ForestParams(n_trees=100, max_depth=4, seed=7)
    n_feat = feats.shape[1]
    names = tuple(f"f{j}" for j in range(n_feat))
    if len(earlier) < 2 * params.min_samples_leaf:
        return max(float(resid.mean()), _MIN_SCALE)
    forest = fit_forest(DesignMatrix(names, feats, resid), params)
    pred = float(forest.predict(np.array(records[upto].features)[None, :])[0])
    return max(pred, _MIN_SCALE)


def conformalize(records, config: ConformalConfig) -> list[PredictionInterval]:
    """Sequential intervals for a single (model, spec, horizon) slice sorted
    by origin. The first interval has no past scores and is emitted with
    infinite width rather than dropped."""
    records = list(records)
    for a, b in zip(records, records[1:]):
        if not a.origin < b.origin:
            raise ValueError("records must be sorted by origin with no duplicates")
    intervals: list[PredictionInterval] = []
    scores: list[float] = []
    for i, r in enumerate(records):
        scale = _scales(records, config, i)
        if i == 0:
            q = math.inf
        else:
            q = windowed_quantile(np.array(scores), i, config.kappa, config.alpha)
        half = q * scale
        intervals.append(PredictionInterval(
            t=r.target, center=r.prediction,
            lower=r.prediction - half, upper=r.prediction + half,
            quantile=q, scale=scale,
        ))
        scores.append(float(abs(r.actual - r.prediction) / scale))
    return intervals


def coverage_report(intervals, actuals) -> dict:
    """Empirical coverage and mean width, excluding infinite cold-start
    intervals (counted separately)."""
    actuals = np.asarray(actuals, float)
    if len(actuals) != len(intervals):
        raise ValueError("length mismatch")
    finite = [(iv, a) for iv, a in zip(intervals, actuals) if math.isfinite(iv.width)]
    infinite = len(intervals) - len(finite)
    if not finite:
        return {"coverage": 1.0, "mean_width": math.inf,
                "n": 0, "infinite_intervals": infinite, "degenerate": True}
    covered = sum(iv.covers(a) for iv, a in finite)
    mean_width = float(np.mean([iv.width for iv, _ in finite]))
    return {"coverage": covered / len(finite), "mean_width": mean_width,
            "n": len(finite), "infinite_intervals": infinite, "degenerate": False}
