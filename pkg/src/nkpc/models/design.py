"""Design matrix container shared by every model."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..quarters import QuarterIndex


@dataclass(frozen=True)
class DesignMatrix:
    feature_names: tuple[str, ...]
    rows: np.ndarray                      # (n, p)
    target: np.ndarray                    # (n,)
    origin_index: tuple[QuarterIndex, ...] = ()

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        target = np.asarray(self.target, dtype=float)
        rows.setflags(write=False)
        target.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if rows.ndim != 2:
            raise ValueError("rows must be 2-D")
        if rows.shape[1] != len(self.feature_names):
            raise ValueError("feature_names length must equal column count")
        if rows.shape[0] != len(target):
            raise ValueError("rows and target length differ")
        if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(target))):
            raise ValueError("design contains non-finite entries")

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]


def canonical_row_order(d: DesignMatrix) -> np.ndarray:
    """Row permutation sorting by (target, features) lexicographically.

    Bootstrap index draws refer to this order, which makes resampled fits
    invariant to the incoming row order.
    """
    keys = np.column_stack([d.target, d.rows])
    return np.lexsort(keys.T[::-1])
