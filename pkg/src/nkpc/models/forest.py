"""Bagged regression forest over the CART tree.

Tree b draws its bootstrap rows and per-split feature subsets from the
substream rng([seed, b]), so the fit is identical at any parallelism level
and invariant to training-row order (rows are put in a canonical order
before any index draws).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import DesignMatrix, canonical_row_order
from .tree import TreeNode, TreeParams, predict_tree


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 200
    max_depth: int = 6
    min_samples_leaf: int = 2
    mtry: int | None = None       # None = ceil(p/3)
    bootstrap: bool = True
    seed: int = 0

    def resolved_mtry(self, p: int) -> int:
        m = self.mtry if self.mtry is not None else math.ceil(p / 3)
        return max(1, min(m, p))


@dataclass(frozen=True)
class Forest:
    trees: tuple[TreeNode, ...]
    params: ForestParams
    feature_names: tuple[str, ...] = ()

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        acc = np.zeros(X.shape[0])
        for t in self.trees:
            acc += predict_tree(t, X)
        return acc / len(self.trees)


def fit_single_tree(d: DesignMatrix, params: ForestParams, b: int,
                    order: np.ndarray | None = None) -> TreeNode:
    """Fit tree b of the forest with its own substream; used by the
    decomposition oracle as well as by fit_forest."""
    if order is None:
        order = canonical_row_order(d)
    X = d.rows[order]
    y = d.target[order]
    rng = np.random.default_rng([params.seed, b])
    if params.bootstrap:
        idx = rng.integers(0, d.n, size=d.n)
        X, y = X[idx], y[idx]
    tree_params = TreeParams(params.max_depth, params.min_samples_leaf,
                             params.resolved_mtry(d.p))
    return _fit_unchecked(X, y, tree_params, rng)


def _fit_unchecked(X, y, tree_params, rng):
    from .tree import _grow, Leaf
    if tree_params.max_depth == 0 or len(y) < 2 * tree_params.min_samples_leaf:
        return Leaf(float(y.mean()), len(y))
    return _grow(X, y, 0, tree_params, rng)


def fit_forest(d: DesignMatrix, params: ForestParams) -> Forest:
    if params.n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if d.n < 2 * params.min_samples_leaf:
        raise ValueError("need n >= 2 * min_samples_leaf")
    order = canonical_row_order(d)
    trees = tuple(fit_single_tree(d, params, b, order) for b in range(params.n_trees))
    return Forest(trees, params, d.feature_names)


def predict_forest(f: Forest, X: np.ndarray) -> np.ndarray:
    return f.predict(X)
