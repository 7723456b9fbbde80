"""Model-agnostic explanation: permutation importance, PDP/ICE, Shapley
values (exact and permutation-sampled), Shapley regression and shares.

The Shapley value function is interventional: f(x|S) is the mean model
prediction over background rows with the features in S pinned to the
explained row's values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .errors import DegenerateFeature, SingularDesign, TooManyFeaturesForExact
from .metrics import rmse
from .models import DesignMatrix, fit_ols

EXACT_FEATURE_LIMIT = 15
DEFAULT_BACKGROUND_CAP = 200


# --- permutation importance ---------------------------------------------

def permutation_importance(model, d: DesignMatrix, repeats: int = 10,
                           seed: int = 0) -> dict[str, tuple[float, float]]:
    """Per-feature (mean, sd) drop in negative-RMSE when the column is
    shuffled; positive importance means the feature helps."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    base = -rmse(d.target, model.predict(d.rows))
    out = {}
    for j, name in enumerate(d.feature_names):
        drops = np.empty(repeats)
        for r in range(repeats):
            rng = np.random.default_rng([seed, j, r])
            perm = d.rows.copy()
            perm[:, j] = perm[rng.permutation(d.n), j]
            drops[r] = base - (-rmse(d.target, model.predict(perm)))
        out[name] = (float(drops.mean()), float(drops.std(ddof=1)) if repeats > 1 else 0.0)
    return out


# --- PDP / ICE ----------------------------------------------------------

@dataclass(frozen=True)
class PdpCurve:
    features: tuple[str, ...]
    grid: tuple[np.ndarray, ...]
    mean_response: np.ndarray            # (g,) or (g1, g2)
    ice: np.ndarray | None = None        # (n_rows, g) for 1-D curves
    grid_resolution: int = 10


def _grid(values: np.ndarray, resolution: int) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if lo == hi:
        raise DegenerateFeature("constant feature")
    return np.linspace(lo, hi, resolution)


def pdp(model, d: DesignMatrix, feature: str, grid_resolution: int = 10) -> PdpCurve:
    """1-D partial dependence with the individual (ICE) lines retained."""
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be >= 2")
    j = d.feature_names.index(feature)
    grid = _grid(d.rows[:, j], grid_resolution)
    ice = np.empty((d.n, grid_resolution))
    for gi, g in enumerate(grid):
        X = d.rows.copy()
        X[:, j] = g
        ice[:, gi] = model.predict(X)
    return PdpCurve((feature,), (grid,), ice.mean(axis=0), ice, grid_resolution)


def pdp2(model, d: DesignMatrix, f1: str, f2: str, grid_resolution: int = 5) -> PdpCurve:
    """2-way partial dependence surface on a grid_resolution^2 grid."""
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be >= 2")
    j1 = d.feature_names.index(f1)
    j2 = d.feature_names.index(f2)
    g1 = _grid(d.rows[:, j1], grid_resolution)
    g2 = _grid(d.rows[:, j2], grid_resolution)
    surface = np.empty((grid_resolution, grid_resolution))
    for a, ga in enumerate(g1):
        for b, gb in enumerate(g2):
            X = d.rows.copy()
            X[:, j1] = ga
            X[:, j2] = gb
            surface[a, b] = model.predict(X).mean()
    return PdpCurve((f1, f2), (g1, g2), surface, None, grid_resolution)


def pdp2_interaction_strength(model, d: DesignMatrix, f1: str, f2: str,
                              grid_resolution: int = 5) -> float:
    """Max deviation of the 2-way surface from additivity in its marginals.

    Zero (up to numerics) for additive models; large for genuine
    interactions.
    """
    surface = pdp2(model, d, f1, f2, grid_resolution).mean_response
    row_mean = surface.mean(axis=1, keepdims=True)
    col_mean = surface.mean(axis=0, keepdims=True)
    additive = row_mean + col_mean - surface.mean()
    return float(np.max(np.abs(surface - additive)))


# --- Shapley values -----------------------------------------------------

@dataclass(frozen=True)
class Attribution:
    row_id: int
    base_value: float
    phi: dict[str, float]
    method: str                            # "exact" | "sampled"
    stderr: dict[str, float] = field(default_factory=dict)
    prediction: float = 0.0

    @property
    def efficiency_gap(self) -> float:
        return self.prediction - (self.base_value + sum(self.phi.values()))


def _subset_value(model, x: np.ndarray, background: np.ndarray, mask: np.ndarray) -> float:
    """Mean prediction over background rows with masked features pinned to x."""
    X = background.copy()
    X[:, mask] = x[mask]
    return float(model.predict(X).mean())


def shapley_exact(model, d: DesignMatrix, row: int,
                  background: np.ndarray | None = None) -> Attribution:
    """Exact Shapley attribution by full subset enumeration (n <= 15)."""
    if background is None:
        background = d.rows
    background = np.atleast_2d(np.asarray(background, float))
    if background.shape[0] == 0:
        raise ValueError("background must be nonempty")
    n = d.p
    if n > EXACT_FEATURE_LIMIT:
        raise TooManyFeaturesForExact(f"{n} features > {EXACT_FEATURE_LIMIT}; use shapley_sampled")
    x = d.rows[row]

    values = np.empty(1 << n)
    sizes = np.empty(1 << n, dtype=int)
    for s in range(1 << n):
        mask = np.array([(s >> k) & 1 for k in range(n)], dtype=bool)
        values[s] = _subset_value(model, x, background, mask)
        sizes[s] = mask.sum()

    fact = [math.factorial(k) for k in range(n + 1)]
    weights = np.array([fact[k] * fact[n - k - 1] / fact[n] for k in range(n)])
    phi = np.zeros(n)
    for s in range(1 << n):
        for k in range(n):
            if not (s >> k) & 1:
                phi[k] += weights[sizes[s]] * (values[s | (1 << k)] - values[s])

    return Attribution(
        row_id=row, base_value=values[0],
        phi=dict(zip(d.feature_names, phi.tolist())),
        method="exact",
        prediction=float(model.predict(x[None, :])[0]),
    )


def shapley_sampled(model, d: DesignMatrix, row: int,
                    background: np.ndarray | None = None,
                    samples: int = 1000, seed: int = 0) -> Attribution:
    """Permutation-sampling Shapley estimate with per-feature standard errors.

    Each draw picks a random feature ordering and one background row; the
    marginal contribution of each feature is the prediction change when it
    is switched from the background value to the explained row's value.
    """
    if samples < 100:
        raise ValueError("samples must be >= 100")
    if background is None:
        background = d.rows
    background = np.atleast_2d(np.asarray(background, float))
    n = d.p
    x = d.rows[row]
    rng = np.random.default_rng([seed, row])

    contrib = np.zeros((samples, n))
    for s in range(samples):
        order = rng.permutation(n)
        z = background[rng.integers(0, background.shape[0])].copy()
        prev = float(model.predict(z[None, :])[0])
        for k in order:
            z[k] = x[k]
            cur = float(model.predict(z[None, :])[0])
            contrib[s, k] = cur - prev
            prev = cur

    phi = contrib.mean(axis=0)
    se = contrib.std(axis=0, ddof=1) / math.sqrt(samples)
    base = float(model.predict(background).mean())
    return Attribution(
        row_id=row, base_value=base,
        phi=dict(zip(d.feature_names, phi.tolist())),
        method="sampled",
        stderr=dict(zip(d.feature_names, se.tolist())),
        prediction=float(model.predict(x[None, :])[0]),
    )


def background_sample(rows: np.ndarray, cap: int = DEFAULT_BACKGROUND_CAP,
                      seed: int = 0) -> np.ndarray:
    """Training-window background, subsampled by seed when over the cap."""
    if rows.shape[0] <= cap:
        return rows
    rng = np.random.default_rng([seed, rows.shape[0]])
    idx = np.sort(rng.choice(rows.shape[0], size=cap, replace=False))
    return rows[idx]


def attribute_all(model, d: DesignMatrix, method: str = "exact",
                  samples: int = 1000, seed: int = 0,
                  background: np.ndarray | None = None) -> list[Attribution]:
    if background is None:
        background = background_sample(d.rows, seed=seed)
    out = []
    for i in range(d.n):
        if method == "exact":
            out.append(shapley_exact(model, d, i, background))
        else:
            out.append(shapley_sampled(model, d, i, background, samples, seed))
    return out


# --- Shapley regression and shares --------------------------------------

@dataclass(frozen=True)
class ShapleyRegressionResult:
    beta_s: dict[str, float]
    p_one_sided: dict[str, float]
    gamma: dict[str, float]               # includes "intercept" share
    stars: dict[str, str]
    intercept: float


def _stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def shapley_regression(y: np.ndarray, attributions: list[Attribution],
                       d: DesignMatrix) -> ShapleyRegressionResult:
    """OLS of the outcome on per-row Shapley values, with one-sided tests of
    nonpositive alignment and signed normalized contribution shares."""
    y = np.asarray(y, float)
    if len(attributions) != len(y):
        raise ValueError("attributions must cover every row of y")
    names = list(attributions[0].phi)
    Phi = np.array([[a.phi[nm] for nm in names] for a in attributions])
    n, p = Phi.shape
    if n < p + 2:
        raise ValueError("need at least n_features + 2 rows")

    design = DesignMatrix(names, Phi, y)
    fit = fit_ols(design)          # raises SingularDesign on collinear columns
    beta = fit.coefficients
    resid = y - fit.predict(Phi)
    dof = n - p - 1
    sigma2 = float(resid @ resid) / dof
    Xc = Phi - Phi.mean(axis=0)
    cov = sigma2 * np.linalg.inv(Xc.T @ Xc)
    se = np.sqrt(np.diag(cov))
    tstat = beta / se
    p_one = sps.t.sf(tstat, dof)   # H0: beta <= 0, reject for large positive t

    base = float(np.mean([a.base_value for a in attributions]))
    mean_abs = np.abs(Phi).mean(axis=0)
    denom = abs(base) + mean_abs.sum()
    signs = []
    for j, nm in enumerate(names):
        xcol = d.rows[:, d.feature_names.index(nm)] if nm in d.feature_names else Phi[:, j]
        slope = np.polyfit(xcol, y, 1)[0]
        signs.append(1.0 if slope >= 0 else -1.0)
    gamma = {nm: float(s * m / denom) for nm, s, m in zip(names, signs, mean_abs)}
    gamma["intercept"] = abs(base) / denom

    p_map = dict(zip(names, p_one.tolist()))
    stars = {nm: _stars(p_map[nm]) for nm in names}
    stars["intercept"] = ""
    return ShapleyRegressionResult(
        beta_s=dict(zip(names, beta.tolist())),
        p_one_sided=p_map,
        gamma=gamma,
        stars=stars,
        intercept=float(fit.intercept),
    )


# --- summary ------------------------------------------------------------

def shapley_summary(attributions: list[Attribution], d: DesignMatrix,
                    top: int = 10) -> list[dict]:
    """Per-feature mean |phi| ranking with (phi, value) pairs for beeswarm
    plotting; restricted to the top features."""
    if not attributions:
        raise ValueError("no attributions")
    names = list(attributions[0].phi)
    mean_abs = {nm: float(np.mean([abs(a.phi[nm]) for a in attributions])) for nm in names}
    ranked = sorted(names, key=lambda nm: (-mean_abs[nm], nm))[:top]
    out = []
    for nm in ranked:
        j = d.feature_names.index(nm) if nm in d.feature_names else None
        points = [
            {"row": a.row_id, "phi": a.phi[nm],
             "value": float(d.rows[a.row_id, j]) if j is not None else math.nan}
            for a in attributions
        ]
        out.append({"feature": nm, "mean_abs_phi": mean_abs[nm], "points": points})
    return out
