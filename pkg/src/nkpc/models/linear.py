"""OLS, ridge and lasso under one coefficient-vector representation.

Penalized fits standardize features on the training window (population
statistics, stored with the fit) and report coefficients on the original
scale. The intercept is never penalized.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConvergenceFailure, SingularDesign
from .design import DesignMatrix

_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class LinearFit:
    intercept: float
    coefficients: np.ndarray
    feature_names: tuple[str, ...] = ()
    penalty: tuple = ("none",)            # ("none",) | ("l2", lam) | ("l1", lam)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float)
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.intercept + X @ self.coefficients


def fit_ols(d: DesignMatrix) -> LinearFit:
    """Least squares via the normal equations on centered data."""
    X, y = d.rows, d.target
    if d.n <= d.p + 1:
        raise SingularDesign(d.feature_names, f"need n > p+1 (n={d.n}, p={d.p})")
    xm = X.mean(axis=0)
    ym = y.mean()
    Xc = X - xm
    sv = np.linalg.svd(Xc, compute_uv=False)
    if sv[-1] <= _RANK_RTOL * max(sv[0], 1.0):
        # name the columns loading on the near-null direction
        _, _, Vt = np.linalg.svd(Xc)
        load = np.abs(Vt[-1])
        bad = [d.feature_names[j] for j in np.nonzero(load > 0.3)[0]]
        raise SingularDesign(bad or list(d.feature_names))
    beta = np.linalg.solve(Xc.T @ Xc, Xc.T @ (y - ym))
    return LinearFit(float(ym - xm @ beta), beta, d.feature_names)


def _standardize(X: np.ndarray):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    return (X - mean) / std, mean, std


def fit_ridge(d: DesignMatrix, lam: float) -> LinearFit:
    """Solve (Z'Z + lam I) b = Z'y on standardized features."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    Z, mean, std = _standardize(d.rows)
    yc = d.target - d.target.mean()
    b = np.linalg.solve(Z.T @ Z + lam * np.eye(d.p), Z.T @ yc)
    coef = b / std
    return LinearFit(
        float(d.target.mean() - mean @ coef), coef, d.feature_names,
        penalty=("l2", float(lam)),
        diagnostics={"standardize_mean": mean.tolist(), "standardize_std": std.tolist()},
    )


def soft_threshold(z: float, lam: float) -> float:
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


def fit_lasso(d: DesignMatrix, lam: float, tol: float = 1e-8, max_sweeps: int = 10_000) -> LinearFit:
    """Cyclic coordinate descent with soft-thresholding.

    Objective: (1/2n) ||y - b0 - Zb||^2 + lam ||b||_1 on standardized Z.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    Z, mean, std = _standardize(d.rows)
    y = d.target
    yc = y - y.mean()
    n, p = Z.shape
    col_sq = (Z ** 2).sum(axis=0) / n      # 1 after standardization, kept for clarity
    b = np.zeros(p)
    resid = yc.copy()
    delta = np.inf
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(p):
            zj = Z[:, j]
            rho = (zj @ resid) / n + col_sq[j] * b[j]
            new = soft_threshold(rho, lam) / col_sq[j]
            if new != b[j]:
                resid -= zj * (new - b[j])
                delta = max(delta, abs(new - b[j]))
                b[j] = new
        if delta < tol:
            break
    else:
        raise ConvergenceFailure(delta)
    coef = b / std
    return LinearFit(
        float(y.mean() - mean @ coef), coef, d.feature_names,
        penalty=("l1", float(lam)),
        diagnostics={"standardize_mean": mean.tolist(), "standardize_std": std.tolist()},
    )


def lasso_lambda_max(d: DesignMatrix) -> float:
    """Smallest lambda killing every coefficient: max_j |z_j'yc| / n."""
    Z, _, _ = _standardize(d.rows)
    yc = d.target - d.target.mean()
    return float(np.max(np.abs(Z.T @ yc)) / d.n)
