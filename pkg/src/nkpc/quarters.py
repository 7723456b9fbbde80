"""Quarterly time axis and the aligned multivariate dataset.

Everything downstream (filters, designs, backtests) reads and writes these
types. All of them are immutable after construction and safe to share.
"""
from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from functools import total_ordering

import numpy as np

from .errors import (
    DegenerateColumn,
    DivisionDomain,
    DuplicateIndex,
    InsufficientHistory,
    MissingColumn,
    ParseError,
    UnsortedIndex,
)

_QUARTER_RE = re.compile(r"^(\d{4})[Qq]([1-4])$")
# month-end forms: Q1 ends in March, etc.
_MONTH_TO_QUARTER = {3: 1, 6: 2, 9: 3, 12: 4}


@total_ordering
@dataclass(frozen=True)
class QuarterIndex:
    """A single quarter on the (year, quarter) axis."""

    year: int
    quarter: int

    def __post_init__(self):
        if self.quarter not in (1, 2, 3, 4):
            raise ValueError(f"quarter must be in 1..4, got {self.quarter}")

    def __lt__(self, other: "QuarterIndex") -> bool:
        return (self.year, self.quarter) < (other.year, other.quarter)

    def __add__(self, k: int) -> "QuarterIndex":
        n = self.year * 4 + (self.quarter - 1) + k
        return QuarterIndex(n // 4, n % 4 + 1)

    def __sub__(self, other) -> int:
        if isinstance(other, QuarterIndex):
            return (self.year * 4 + self.quarter) - (other.year * 4 + other.quarter)
        return self + (-other)

    def __str__(self) -> str:
        return f"{self.year}Q{self.quarter}"

    @classmethod
    def parse(cls, text: str) -> "QuarterIndex":
        """Parse '2000Q1' or a quarter-end date like '2000-03-31'."""
        text = text.strip()
        m = _QUARTER_RE.match(text)
        if m:
            return cls(int(m.group(1)), int(m.group(2)))
        m = re.match(r"^(\d{4})-(\d{2})(?:-(\d{2}))?$", text)
        if m:
            month = int(m.group(2))
            if month in _MONTH_TO_QUARTER:
                return cls(int(m.group(1)), _MONTH_TO_QUARTER[month])
        raise ValueError(f"cannot parse quarter {text!r}")


def quarter_range(start: QuarterIndex, n: int) -> tuple[QuarterIndex, ...]:
    return tuple(start + k for k in range(n))


@dataclass(frozen=True)
class Series:
    """Named quarterly series with a strictly increasing index."""

    name: str
    index: tuple[QuarterIndex, ...]
    values: np.ndarray
    units: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "index", tuple(self.index))
        if len(self.index) != len(self.values):
            raise ValueError("index and values length differ")
        for a, b in zip(self.index, self.index[1:]):
            if not a < b:
                raise UnsortedIndex(f"series {self.name!r}: {a} !< {b}")

    def __len__(self) -> int:
        return len(self.values)

    def at(self, q: QuarterIndex) -> float:
        return float(self.values[self.index.index(q)])

    def rename(self, name: str) -> "Series":
        return Series(name, self.index, self.values, self.units)

    def slice_upto(self, q: QuarterIndex) -> "Series":
        """Restrict to index entries <= q."""
        keep = [i for i, t in enumerate(self.index) if t <= q]
        return Series(self.name, [self.index[i] for i in keep], self.values[keep], self.units)


@dataclass(frozen=True)
class Dataset:
    """Aligned quarterly table; all columns share the same index."""

    index: tuple[QuarterIndex, ...]
    columns: dict[str, Series] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(self.index))
        names = list(self.columns)
        if len(set(names)) != len(names):
            raise DuplicateIndex("duplicate column names")
        for s in self.columns.values():
            if s.index != self.index:
                raise UnsortedIndex(f"column {s.name!r} index does not match dataset index")

    def __len__(self) -> int:
        return len(self.index)

    def column(self, name: str) -> Series:
        try:
            return self.columns[name]
        except KeyError:
            raise MissingColumn(f"column {name!r} not in dataset") from None

    def with_columns(self, *series: Series) -> "Dataset":
        cols = dict(self.columns)
        for s in series:
            cols[s.name] = s
        return Dataset(self.index, cols)

    def slice_upto(self, q: QuarterIndex) -> "Dataset":
        keep = [t for t in self.index if t <= q]
        return Dataset(keep, {n: s.slice_upto(q) for n, s in self.columns.items()})

    def to_json(self) -> str:
        payload = {
            "index": [str(q) for q in self.index],
            "columns": {n: [float(v) for v in s.values] for n, s in self.columns.items()},
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Dataset":
        payload = json.loads(text)
        index = tuple(QuarterIndex.parse(q) for q in payload["index"])
        cols = {n: Series(n, index, np.array(v, dtype=float)) for n, v in payload["columns"].items()}
        return cls(index, cols)


def align(series: list[Series]) -> tuple[tuple[QuarterIndex, ...], list[np.ndarray]]:
    """Intersect indexes and return the common index plus aligned value arrays."""
    common = set(series[0].index)
    for s in series[1:]:
        common &= set(s.index)
    index = tuple(sorted(common))
    out = []
    for s in series:
        pos = {q: i for i, q in enumerate(s.index)}
        out.append(s.values[[pos[q] for q in index]])
    return index, out


def dataset_from_series(series: list[Series]) -> Dataset:
    index, values = align(series)
    cols = {s.name: Series(s.name, index, v, s.units) for s, v in zip(series, values)}
    return Dataset(index, cols)


# --- CSV ingestion / export ---------------------------------------------

def load_csv(path_or_text, schema: dict[str, str] | None = None) -> Dataset:
    """Read a quarterly CSV (header row, first column `date`) into a Dataset.

    `schema` optionally maps column names to roles; columns named there must
    exist. Rows must be sorted by quarter with no duplicates.
    """
    if hasattr(path_or_text, "read"):
        text = path_or_text.read()
    else:
        try:
            with open(path_or_text, "r", encoding="utf-8") as fh:
                text = fh.read()
        except (OSError, ValueError):
            text = str(path_or_text)
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r]
    if not rows:
        raise ParseError(0, "date", "empty file")
    header = [h.strip() for h in rows[0]]
    names = header[1:]

    index: list[QuarterIndex] = []
    data: list[list[float]] = []
    for rownum, row in enumerate(rows[1:], start=2):
        try:
            q = QuarterIndex.parse(row[0])
        except ValueError:
            raise ParseError(rownum, header[0]) from None
        parsed = []
        for name, cell in zip(names, row[1:]):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ParseError(rownum, name) from None
        index.append(q)
        data.append(parsed)

    for a, b in zip(index, index[1:]):
        if a == b:
            raise DuplicateIndex(f"quarter {a} appears twice")
        if a > b:
            raise UnsortedIndex(f"quarter {b} follows {a}")

    arr = np.array(data, dtype=float)
    cols = {n: Series(n, index, arr[:, j]) for j, n in enumerate(names)}
    if schema:
        for name in schema:
            if name not in cols:
                raise MissingColumn(f"schema column {name!r} not in file")
    return Dataset(tuple(index), cols)


def write_csv(d: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + list(d.columns))
        for i, q in enumerate(d.index):
            writer.writerow([str(q)] + [repr(float(s.values[i])) for s in d.columns.values()])


# --- transforms ---------------------------------------------------------

def yoy_growth(s: Series) -> Series:
    """Year-on-year growth in percent: 100*(s_t - s_{t-4})/s_{t-4}."""
    if len(s) < 5:
        raise InsufficientHistory(f"yoy_growth needs >= 5 observations, got {len(s)}")
    if np.any(s.values <= 0):
        raise DivisionDomain(f"series {s.name!r} has nonpositive values")
    out = 100.0 * (s.values[4:] - s.values[:-4]) / s.values[:-4]
    return Series(s.name, s.index[4:], out, units="% y-o-y")


def lag(s: Series, k: int) -> Series:
    """Row t holds s_{t-k}; the first k rows are dropped."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k >= len(s):
        raise InsufficientHistory(f"lag {k} >= length {len(s)}")
    if k == 0:
        return s
    return Series(s.name, s.index[k:], s.values[:-k], s.units)


def lead(s: Series, k: int) -> Series:
    """Row t holds s_{t+k}; the last k rows are dropped."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k >= len(s):
        raise InsufficientHistory(f"lead {k} >= length {len(s)}")
    if k == 0:
        return s
    return Series(s.name, s.index[:-k], s.values[k:], s.units)


def first_principal_component(columns: list[Series], name: str = "pc1") -> Series:
    """Leading principal component of standardized columns.

    Standardization uses the population variance (divide by n). The sign is
    fixed so the largest-magnitude loading is positive.
    """
    if len(columns) < 2:
        raise ValueError("need at least 2 columns")
    index, values = align(columns)
    X = np.column_stack(values)
    std = X.std(axis=0)  # population
    for s, sd in zip(columns, std):
        if sd == 0:
            raise DegenerateColumn(f"column {s.name!r} has zero variance")
    Z = (X - X.mean(axis=0)) / std
    corr = (Z.T @ Z) / Z.shape[0]
    eigvals, eigvecs = np.linalg.eigh(corr)
    v = eigvecs[:, -1]
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return Series(name, index, Z @ v)


def pc1_loadings(columns: list[Series]) -> np.ndarray:
    """Loadings of the first principal component (same conventions as above)."""
    _, values = align(columns)
    X = np.column_stack(values)
    Z = (X - X.mean(axis=0)) / X.std(axis=0)
    corr = (Z.T @ Z) / Z.shape[0]
    _, eigvecs = np.linalg.eigh(corr)
    v = eigvecs[:, -1]
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v
