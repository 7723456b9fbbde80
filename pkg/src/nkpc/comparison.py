"""Formal forecast comparison: MCB ranking and the rolling fluctuation test."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from math import ceil, sqrt

import numpy as np
from scipy import integrate, stats

from .errors import (
    DegenerateVariance,
    LengthMismatch,
    NotEnoughModels,
    WindowTooLarge,
)


# --- studentized range critical value -----------------------------------

def studentized_range_cdf(q: float, k: int) -> float:
    """CDF of the range of k standard normals over a unit scale (df = inf)."""
    if q <= 0:
        return 0.0

    def integrand(z):
        return stats.norm.pdf(z) * (stats.norm.cdf(z) - stats.norm.cdf(z - q)) ** (k - 1)

    val, _ = integrate.quad(integrand, -8.0 - q, 8.0 + q, limit=200)
    return k * val


@lru_cache(maxsize=64)
def studentized_range_critical(k: int, alpha: float) -> float:
    """Upper alpha critical value by bisection on the df = inf CDF."""
    target = 1.0 - alpha
    lo, hi = 0.0, 20.0
    while studentized_range_cdf(hi, k) < target:
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if studentized_range_cdf(mid, k) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- MCB ----------------------------------------------------------------

@dataclass(frozen=True)
class McbResult:
    mean_ranks: dict[str, float]
    critical_distance: float
    best: str
    alpha: float
    indistinguishable: tuple[str, ...] = ()
    ties_flagged: bool = False


def _average_ranks(row: np.ndarray) -> np.ndarray:
    """Rank 1 = lowest error; equal values share the average rank."""
    order = np.argsort(row, kind="stable")
    ranks = np.empty(len(row))
    i = 0
    while i < len(row):
        j = i
        while j + 1 < len(row) and row[order[j + 1]] == row[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def mcb_test(error_table: dict[str, list[float]] | np.ndarray,
             alpha: float = 0.05,
             model_names: list[str] | None = None) -> McbResult:
    """Multiple-comparisons-with-the-best over a (rows x models) error table.

    Rows are independent settings (dataset slices, horizons, specs); models
    are ranked within each row, 1 = most accurate.
    """
    if isinstance(error_table, dict):
        model_names = list(error_table)
        table = np.column_stack([np.asarray(error_table[m], float) for m in model_names])
    else:
        table = np.asarray(error_table, dtype=float)
        if model_names is None:
            model_names = [f"model_{j}" for j in range(table.shape[1])]
    n_rows, n_models = table.shape
    if n_models < 2:
        raise NotEnoughModels(f"need >= 2 models, got {n_models}")
    if n_rows < 2:
        raise NotEnoughModels(f"need >= 2 rows, got {n_rows}")

    ranks = np.vstack([_average_ranks(row) for row in table])
    mean_ranks = ranks.mean(axis=0)
    theta = studentized_range_critical(n_models, alpha)
    cd = theta * sqrt(n_models * (n_models + 1) / (6.0 * n_rows))

    order = np.lexsort((model_names, mean_ranks))
    best_idx = order[0]
    ties = bool(np.sum(np.isclose(mean_ranks, mean_ranks[best_idx])) > 1)
    best_lo, best_hi = mean_ranks[best_idx] - cd, mean_ranks[best_idx] + cd
    indist = tuple(
        model_names[j] for j in range(n_models)
        if j != best_idx and mean_ranks[j] - cd <= best_hi and mean_ranks[j] + cd >= best_lo
    )
    return McbResult(
        mean_ranks=dict(zip(model_names, mean_ranks.tolist())),
        critical_distance=float(cd),
        best=model_names[best_idx],
        alpha=alpha,
        indistinguishable=indist,
        ties_flagged=ties,
    )


# --- rolling fluctuation test -------------------------------------------

def load_gr_critical_values() -> dict:
    with resources.files("nkpc.data").joinpath("gr_critical_values.json").open() as fh:
        return json.load(fh)


def gr_critical_value(mu: float, alpha: float, table: dict | None = None) -> float:
    """Two-sided critical value for the fluctuation statistic, interpolated
    in mu from the bundled table. alpha is the miscoverage (0.05 or 0.10)."""
    table = table or load_gr_critical_values()
    level = f"{1.0 - alpha:.2f}"
    if level not in table["critical_values"]:
        raise ValueError(f"no critical values for confidence level {level}")
    mus = np.asarray(table["mu"], float)
    cvs = np.asarray(table["critical_values"][level], float)
    if not (mus[0] <= mu <= mus[-1]):
        raise ValueError(f"mu={mu} outside tabulated range [{mus[0]}, {mus[-1]}]")
    return float(np.interp(mu, mus, cvs))


def hac_variance(d: np.ndarray, bandwidth: int) -> float:
    """Bartlett-kernel long-run variance of a (demeaned internally) sample."""
    x = d - d.mean()
    n = len(x)
    gamma0 = float(x @ x) / n
    var = gamma0
    for lag in range(1, min(bandwidth, n - 1) + 1):
        w = 1.0 - lag / (bandwidth + 1.0)
        var += 2.0 * w * float(x[:-lag] @ x[lag:]) / n
    return var


@dataclass(frozen=True)
class GrResult:
    window_fraction: float
    window_size: int
    stat_index: tuple                    # time label of each window end
    rolling_stats: np.ndarray
    critical_value: float
    rejections: tuple = ()
    alpha: float = 0.05

    def __post_init__(self):
        stats_arr = np.asarray(self.rolling_stats, dtype=float)
        stats_arr.setflags(write=False)
        object.__setattr__(self, "rolling_stats", stats_arr)


def gr_fluctuation_test(loss_a, loss_b, mu: float, alpha: float = 0.05,
                        index: list | None = None,
                        critical_table: dict | None = None) -> GrResult:
    """Rolling standardized mean of the loss differential loss_a - loss_b.

    Each window of m = ceil(mu * n) points yields sqrt(m) * mean(d) / sigma
    with sigma from a Bartlett HAC estimate (bandwidth ceil(m^(1/3))).
    Statistics beyond +/- the tabulated critical value are rejections.
    """
    a = np.asarray(loss_a, dtype=float)
    b = np.asarray(loss_b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"{a.shape} vs {b.shape}")
    n = len(a)
    m = ceil(mu * n)
    if m < 4:
        raise WindowTooLarge(f"window m={m} < 4; increase mu or sample")
    if m > n:
        raise WindowTooLarge(f"window m={m} exceeds sample n={n}")
    d = a - b
    if index is None:
        index = list(range(n))

    bandwidth = ceil(m ** (1.0 / 3.0))
    stats_out = []
    labels = []
    for end in range(m, n + 1):
        window = d[end - m:end]
        if np.allclose(window, window[0]) and not np.allclose(window, 0.0):
            raise DegenerateVariance("constant nonzero loss differential in window")
        var = hac_variance(window, bandwidth)
        if np.allclose(window, 0.0):
            stats_out.append(0.0)
        elif var <= 0:
            raise DegenerateVariance("nonpositive HAC variance")
        else:
            stats_out.append(sqrt(m) * window.mean() / sqrt(var))
        labels.append(index[end - 1])

    cv = gr_critical_value(mu, alpha, critical_table)
    stats_arr = np.array(stats_out)
    rejections = tuple(lab for lab, s in zip(labels, stats_arr) if abs(s) > cv)
    return GrResult(mu, m, tuple(labels), stats_arr, cv, rejections, alpha)
