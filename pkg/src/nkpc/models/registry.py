"""Uniform fit/predict access to the design-based forecasters.

Each entry takes a DesignMatrix plus a hyperparameter dict and returns a
fitted object exposing .predict(X). Hyperparameter tuning runs blocked
K-fold cross-validation (contiguous folds, no shuffling) over a small grid.
"""
from __future__ import annotations


import numpy as np

from .boosting import GbtParams, fit_gbt
from .design import DesignMatrix
from .forest import ForestParams, fit_forest
from .linear import fit_lasso, fit_ols, fit_ridge


def _fit_ols(d, params):
    return fit_ols(d)


def _fit_ridge(d, params):
    return fit_ridge(d, params.get("lam", 1.0))


def _fit_lasso(d, params):
    return fit_lasso(d, params.get("lam", 0.1))


def _fit_rf(d, params):
    return fit_forest(d, ForestParams(**{k: v for k, v in params.items() if k != "grid"}))


def _fit_gbt(d, params):
    return fit_gbt(d, GbtParams(**{k: v for k, v in params.items() if k != "grid"}))


FITTERS = {
    "ols": _fit_ols,
    "ridge": _fit_ridge,
    "lasso": _fit_lasso,
    "rf": _fit_rf,
    "gbt": _fit_gbt,
}

DESIGN_MODELS = tuple(FITTERS)
RECURSIVE_MODELS = ("ar", "var", "rw")


def default_grid(kind: str, p: int) -> list[dict]:
    """Small tuning grid per model family; linear penalties on a log path."""
    if kind in ("ridge", "lasso"):
        return [{"lam": lam} for lam in (0.01, 0.1, 1.0, 10.0)]
    if kind == "rf":
        grid = []
        for n_trees in (200, 500):
            for max_depth in (3, 6, 10_000):
                for mtry in (None, p):
                    grid.append({"n_trees": n_trees, "max_depth": max_depth, "mtry": mtry})
        return grid
    if kind == "gbt":
        return [
            {"n_rounds": n, "learning_rate": lr, "max_depth": 3}
            for n in (100, 300) for lr in (0.05, 0.1)
        ]
    return [{}]


def blocked_folds(n: int, k: int = 5):
    """Contiguous index blocks; limits leakage relative to shuffled folds."""
    bounds = np.linspace(0, n, k + 1).astype(int)
    for i in range(k):
        lo, hi = bounds[i], bounds[i + 1]
        if hi > lo:
            yield np.arange(lo, hi)


def cv_rmse(kind: str, d: DesignMatrix, params: dict, k: int = 5) -> float:
    errs = []
    for test_idx in blocked_folds(d.n, k):
        train_mask = np.ones(d.n, bool)
        train_mask[test_idx] = False
        if train_mask.sum() < 5:
            continue
        sub = DesignMatrix(d.feature_names, d.rows[train_mask], d.target[train_mask])
        try:
            model = FITTERS[kind](sub, params)
        except Exception:
            return np.inf
        pred = model.predict(d.rows[test_idx])
        errs.extend((pred - d.target[test_idx]) ** 2)
    return float(np.sqrt(np.mean(errs))) if errs else np.inf


def tune(kind: str, d: DesignMatrix, grid: list[dict] | None = None, k: int = 5) -> dict:
    """Pick the grid point with lowest blocked-CV RMSE (first wins ties)."""
    candidates = grid if grid is not None else default_grid(kind, d.p)
    best_params, best_score = candidates[0], np.inf
    for params in candidates:
        score = cv_rmse(kind, d, params, k)
        if score < best_score:
            best_params, best_score = params, score
    return best_params


def fit(kind: str, d: DesignMatrix, params: dict | None = None):
    if kind not in FITTERS:
        raise ValueError(f"unknown design model {kind!r}")
    return FITTERS[kind](d, params or {})
