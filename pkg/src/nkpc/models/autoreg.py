"""AR(p), VAR(p) and the random-walk baseline, with recursive forecasting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientHistory
from ..quarters import Series
from .design import DesignMatrix
from .linear import LinearFit, fit_ols


@dataclass(frozen=True)
class ArFit:
    """AR(p): y_t = c + sum_k phi_k y_{t-k}."""

    p: int
    fit: LinearFit

    def predict_recursive(self, history: np.ndarray, h: int) -> np.ndarray:
        if h < 1:
            raise ValueError("h must be >= 1")
        buf = list(np.asarray(history, dtype=float))
        out = []
        for _ in range(h):
            lags = np.array(buf[-self.p:][::-1])
            nxt = float(self.fit.intercept + lags @ self.fit.coefficients)
            buf.append(nxt)
            out.append(nxt)
        return np.array(out)


@dataclass(frozen=True)
class VarFit:
    """VAR(p) fitted equation by equation; variable order is fixed."""

    p: int
    names: tuple[str, ...]
    fits: tuple[LinearFit, ...]

    def predict_recursive(self, history: np.ndarray, h: int) -> np.ndarray:
        """history: (t, m) array; returns (h, m) forecasts."""
        if h < 1:
            raise ValueError("h must be >= 1")
        buf = [row for row in np.asarray(history, dtype=float)]
        out = []
        for _ in range(h):
            x = np.concatenate([buf[-k] for k in range(1, self.p + 1)])
            nxt = np.array([f.intercept + x @ f.coefficients for f in self.fits])
            buf.append(nxt)
            out.append(nxt)
        return np.array(out)


def fit_ar(s: Series, p: int) -> ArFit:
    if p < 1:
        raise ValueError("p must be >= 1")
    if len(s) <= max(20, 3 * p):
        raise InsufficientHistory(f"fit_ar needs length > max(20, 3p), got {len(s)}")
    y = s.values
    X = np.column_stack([y[p - k:len(y) - k] for k in range(1, p + 1)])
    names = [f"{s.name}.L{k}" for k in range(1, p + 1)]
    d = DesignMatrix(names, X, y[p:])
    return ArFit(p, fit_ols(d))


def fit_var(cols: list[Series], p: int) -> VarFit:
    if p < 1:
        raise ValueError("p must be >= 1")
    if len(cols) < 2:
        raise ValueError("VAR needs >= 2 series")
    n = len(cols[0])
    for s in cols:
        if s.index != cols[0].index:
            raise ValueError("VAR series must share an index")
    if n <= max(20, 3 * p):
        raise InsufficientHistory(f"fit_var needs length > max(20, 3p), got {n}")
    values = np.column_stack([s.values for s in cols])
    names = []
    for k in range(1, p + 1):
        names.extend(f"{s.name}.L{k}" for s in cols)
    X = np.column_stack([values[p - k:n - k] for k in range(1, p + 1)])
    fits = []
    for j, s in enumerate(cols):
        d = DesignMatrix(names, X, values[p:, j])
        fits.append(fit_ols(d))
    return VarFit(p, tuple(s.name for s in cols), tuple(fits))


def random_walk_forecast(s: Series, origin, h: int) -> float:
    """No-change forecast: the value at the origin quarter, for every h."""
    if h < 1:
        raise ValueError("h must be >= 1")
    return s.at(origin)
