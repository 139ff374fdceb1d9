"""Regression-based edge pruning of a candidate graph.

For each node i the parents read off the candidate adjacency (column i) are
regressed onto i with an intercept; the resulting coefficients fill
weights[i][j] for parent j. Pruning keeps edges whose absolute coefficient
reaches the d-th largest overall, then breaks any remaining cycles using the
coefficient magnitudes as edge weights.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import Dataset
from .graph import AdjacencyMatrix, WeightedDigraph, remove_cycles
from .util import InputError, derive_rng


@dataclass(frozen=True)
class WeightMatrix:
    """weights[i][j] = fitted coefficient of parent j in the regression of node i.

    Note the orientation is transposed relative to AdjacencyMatrix: the edge
    j -> i in the graph stores its coefficient at [i][j]. Entries are zero
    wherever the candidate graph has no edge.
    """

    weights: np.ndarray
    node_names: tuple[str, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InputError(f"weight matrix must be square, got shape {w.shape}")
        if not np.isfinite(w).all():
            raise InputError("regression weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        names = tuple(str(n) for n in self.node_names)
        if len(names) != w.shape[0] or len(set(names)) != w.shape[0]:
            raise InputError("node names must be unique and match the matrix size")
        object.__setattr__(self, "node_names", names)

    @property
    def d(self) -> int:
        return self.weights.shape[0]


def regression_weights(x: Dataset, a: AdjacencyMatrix) -> WeightMatrix:
    """Least-squares coefficients of each node on its candidate parents."""
    if x.d != a.d:
        raise InputError(f"dataset has {x.d} columns but graph has {a.d} nodes")
    d = a.d
    w = np.zeros((d, d))
    ones = np.ones((x.m, 1))
    for i in range(d):
        parents = np.flatnonzero(a.entries[:, i])
        if parents.size == 0:
            continue
        design = np.hstack([x.values[:, parents], ones])
        coef, *_ = np.linalg.lstsq(design, x.values[:, i], rcond=None)
        w[i, parents] = coef[:-1]
    return WeightMatrix(weights=w, node_names=a.node_names)


def prune(w: WeightMatrix, rng: np.random.Generator | None = None) -> AdjacencyMatrix:
    """Keep edges whose |coefficient| is at least the d-th largest overall.

    The threshold is global across the flattened matrix; when fewer than d
    coefficients are nonzero it falls back to the smallest nonzero magnitude,
    so pruning never resurrects non-edges. Equal-magnitude ties all survive.
    A final cycle-removal pass (weighted by |coefficient|) guarantees a DAG.
    """
    if rng is None:
        rng = derive_rng(0, "prune")
    absw = np.abs(w.weights)
    flat = np.sort(absw.ravel())[::-1]
    th = flat[w.d - 1]
    if th == 0.0:
        nonzero = absw[absw > 0]
        if nonzero.size == 0:
            return AdjacencyMatrix.from_array(np.zeros((w.d, w.d), dtype=np.int8), w.node_names)
        th = float(nonzero.min())
    keep = absw >= th
    # keep[i][j] marks the surviving edge j -> i; transpose into source->target.
    surviving = (absw * keep).T
    g = WeightedDigraph.from_array(surviving, w.node_names)
    return remove_cycles(g, rng)


def write_weight_csv(w: WeightMatrix, path: str | Path, header: bool = True) -> None:
    """Dump coefficients in adjacency orientation: row = source, column = target."""
    out = w.weights.T
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(w.node_names)
        for row in out:
            writer.writerow([repr(float(v)) for v in row])
