"""Datasets and the per-node feature matrix consumed by the data encoder."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .util import InputError

MI_BINS = 10


@dataclass(frozen=True)
class Dataset:
    """m samples of d columns. column_kinds entries are "continuous" or "discrete"."""

    values: np.ndarray
    column_names: tuple[str, ...]
    column_kinds: tuple[str, ...]
    degenerate_columns: tuple[int, ...] = field(default=())

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise InputError(f"dataset must be 2-dimensional, got shape {vals.shape}")
        if vals.shape[0] < 2:
            raise InputError(f"dataset needs at least 2 rows, got {vals.shape[0]}")
        if not np.isfinite(vals).all():
            raise InputError("dataset contains NaN or Inf values")
        names = tuple(str(n) for n in self.column_names)
        kinds = tuple(self.column_kinds)
        if len(names) != vals.shape[1] or len(set(names)) != vals.shape[1]:
            raise InputError("column names must be unique and match the column count")
        if len(kinds) != vals.shape[1] or any(k not in ("continuous", "discrete") for k in kinds):
            raise InputError("column kinds must be 'continuous' or 'discrete' per column")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "column_kinds", kinds)
        object.__setattr__(self, "degenerate_columns", tuple(self.degenerate_columns))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def detect_column_kinds(values: np.ndarray, max_distinct: int = 20) -> tuple[str, ...]:
    """A column is discrete when integer-valued with at most max_distinct levels."""
    kinds = []
    for j in range(values.shape[1]):
        col = values[:, j]
        integral = np.allclose(col, np.round(col), atol=1e-12)
        kinds.append("discrete" if integral and np.unique(col).size <= max_distinct else "continuous")
    return tuple(kinds)


def make_dataset(values, column_names=None, column_kinds=None, max_distinct: int = 20) -> Dataset:
    values = np.asarray(values, dtype=np.float64)
    if column_names is None:
        column_names = tuple(f"X{i}" for i in range(values.shape[1]))
    if column_kinds is None:
        column_kinds = detect_column_kinds(values, max_distinct)
    return Dataset(values=values, column_names=tuple(column_names), column_kinds=tuple(column_kinds))


def load_dataset(path: str | Path, max_distinct: int = 20, column_kinds=None) -> Dataset:
    """Read a dataset CSV: first row is column names, remaining rows are numbers.

    Rows containing missing or non-finite cells are rejected (dropped) at load.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise InputError(f"dataset {path} needs a header row and at least 2 data rows")
    names = [v.strip() for v in rows[0]]
    parsed = []
    for row in rows[1:]:
        if len(row) != len(names):
            raise InputError(f"row width {len(row)} does not match header width {len(names)} in {path}")
        try:
            vals = [float(v) for v in row]
        except ValueError:
            vals = [np.nan]
        if all(np.isfinite(v) for v in vals):
            parsed.append(vals)
    if len(parsed) < 2:
        raise InputError(f"dataset {path} has fewer than 2 complete rows after dropping bad rows")
    values = np.asarray(parsed, dtype=np.float64)
    kinds = tuple(column_kinds) if column_kinds is not None else detect_column_kinds(values, max_distinct)
    return Dataset(values=values, column_names=tuple(names), column_kinds=kinds)


def write_dataset_csv(x: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(x.column_names)
        for row in x.values:
            writer.writerow([repr(float(v)) for v in row])


def standardize(x: Dataset) -> Dataset:
    """Zero-mean unit-variance columns; zero-variance columns become all zeros
    and are flagged in degenerate_columns."""
    vals = x.values
    mean = vals.mean(axis=0)
    std = vals.std(axis=0)
    degenerate = np.flatnonzero(std == 0.0)
    safe = np.where(std == 0.0, 1.0, std)
    out = (vals - mean) / safe
    out[:, degenerate] = 0.0
    return Dataset(
        values=out,
        column_names=x.column_names,
        column_kinds=x.column_kinds,
        degenerate_columns=tuple(int(j) for j in degenerate),
    )


@dataclass(frozen=True)
class NodeFeatureMatrix:
    """Row i = [mean_i, var_i, corr(i, 0..d-1), mi(i, 0..d-1)], width 2 + 2d."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if not np.isfinite(rows).all():
            raise InputError("feature matrix contains non-finite entries")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def d(self) -> int:
        return self.rows.shape[0]

    @property
    def width(self) -> int:
        return self.rows.shape[1]


def _correlation(vals: np.ndarray) -> np.ndarray:
    m, d = vals.shape
    centered = vals - vals.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    corr = np.zeros((d, d))
    ok = norms > 0
    if ok.any():
        sub = centered[:, ok] / norms[ok]
        corr[np.ix_(ok, ok)] = np.clip(sub.T @ sub, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def _discretize(col: np.ndarray, kind: str) -> tuple[np.ndarray, int]:
    """Map a column to integer codes for histogram estimation.

    Discrete columns use their own value levels when there are at most MI_BINS
    of them; otherwise (and for continuous columns) equal-width bins are used.
    """
    uniq = np.unique(col)
    if kind == "discrete" and uniq.size <= MI_BINS:
        codes = np.searchsorted(uniq, col)
        return codes.astype(np.int64), int(uniq.size)
    lo, hi = col.min(), col.max()
    if hi <= lo:
        return np.zeros(col.shape[0], dtype=np.int64), 1
    codes = np.floor((col - lo) / (hi - lo) * MI_BINS).astype(np.int64)
    codes[codes == MI_BINS] = MI_BINS - 1
    return codes, MI_BINS


def _mutual_information(vals: np.ndarray, kinds) -> np.ndarray:
    """Histogram MI in nats between every column pair; self-MI fixed at 0."""
    m, d = vals.shape
    coded = [_discretize(vals[:, j], kinds[j]) for j in range(d)]
    mi = np.zeros((d, d))
    for i in range(d):
        ci, ni = coded[i]
        pi = np.bincount(ci, minlength=ni) / m
        for j in range(i + 1, d):
            cj, nj = coded[j]
            pj = np.bincount(cj, minlength=nj) / m
            joint = np.bincount(ci * nj + cj, minlength=ni * nj).reshape(ni, nj) / m
            outer = np.outer(pi, pj)
            mask = joint > 0
            val = float((joint[mask] * np.log(joint[mask] / outer[mask])).sum())
            mi[i, j] = mi[j, i] = max(val, 0.0)
    return mi


def compute_features(x: Dataset) -> NodeFeatureMatrix:
    """Assemble the encoder input from a (standardized) dataset."""
    vals = x.values
    mean = vals.mean(axis=0)
    var = vals.var(axis=0)
    corr = _correlation(vals)
    mi = _mutual_information(vals, x.column_kinds)
    rows = np.hstack([mean[:, None], var[:, None], corr, mi])
    return NodeFeatureMatrix(rows=rows)
