"""Directed-graph types and operations.

Graphs over d nodes are stored as dense d x d matrices with the convention
entry[i][j] != 0 means an edge i -> j (row = source, column = target).
Self-loops are rejected at construction everywhere.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .util import InputError

ACYCLICITY_TOL = 1e-9


def default_node_names(d: int) -> tuple[str, ...]:
    return tuple(f"X{i}" for i in range(d))


def _check_names(names, d: int) -> tuple[str, ...]:
    names = tuple(str(n) for n in names)
    if len(names) != d:
        raise InputError(f"expected {d} node names, got {len(names)}")
    if len(set(names)) != d:
        raise InputError("node names must be unique")
    return names


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Binary directed graph. entries[i][j] = 1 encodes the edge i -> j."""

    entries: np.ndarray
    node_names: tuple[str, ...]

    def __post_init__(self):
        ent = np.asarray(self.entries)
        if ent.ndim != 2 or ent.shape[0] != ent.shape[1]:
            raise InputError(f"adjacency matrix must be square, got shape {ent.shape}")
        if not np.isin(ent, (0, 1)).all():
            raise InputError("adjacency entries must be 0 or 1")
        if np.diag(ent).any():
            raise InputError("self-loops are not allowed (nonzero diagonal)")
        object.__setattr__(self, "entries", _frozen(ent.astype(np.int8)))
        object.__setattr__(self, "node_names", _check_names(self.node_names, ent.shape[0]))

    @classmethod
    def from_array(cls, arr, node_names=None) -> "AdjacencyMatrix":
        arr = np.asarray(arr)
        names = node_names if node_names is not None else default_node_names(arr.shape[0])
        return cls(entries=arr, node_names=names)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    def edge_count(self) -> int:
        return int(self.entries.sum())

    def edges(self) -> list[tuple[int, int]]:
        src, dst = np.nonzero(self.entries)
        return list(zip(src.tolist(), dst.tolist()))


@dataclass(frozen=True)
class WeightedDigraph:
    """Nonnegative edge weights; weights[i][j] > 0 encodes the edge i -> j."""

    weights: np.ndarray
    node_names: tuple[str, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InputError(f"weight matrix must be square, got shape {w.shape}")
        if not np.isfinite(w).all():
            raise InputError("weights must be finite")
        if (w < 0).any():
            raise InputError("weights must be nonnegative")
        if np.diag(w).any():
            raise InputError("self-loops are not allowed (nonzero diagonal)")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "node_names", _check_names(self.node_names, w.shape[0]))

    @classmethod
    def from_array(cls, arr, node_names=None) -> "WeightedDigraph":
        arr = np.asarray(arr)
        names = node_names if node_names is not None else default_node_names(arr.shape[0])
        return cls(weights=arr, node_names=names)

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    def support(self) -> AdjacencyMatrix:
        return AdjacencyMatrix.from_array((self.weights > 0).astype(np.int8), self.node_names)


@dataclass(frozen=True)
class ProbabilityMatrix:
    """Edge-inclusion probabilities; the diagonal is identically zero."""

    probs: np.ndarray
    node_names: tuple[str, ...]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise InputError(f"probability matrix must be square, got shape {p.shape}")
        if not np.isfinite(p).all() or (p < 0).any() or (p > 1).any():
            raise InputError("probabilities must lie in [0, 1]")
        if np.diag(p).any():
            raise InputError("diagonal probabilities must be zero")
        object.__setattr__(self, "probs", _frozen(p))
        object.__setattr__(self, "node_names", _check_names(self.node_names, p.shape[0]))

    @classmethod
    def from_array(cls, arr, node_names=None) -> "ProbabilityMatrix":
        arr = np.asarray(arr)
        names = node_names if node_names is not None else default_node_names(arr.shape[0])
        return cls(probs=arr, node_names=names)

    @property
    def d(self) -> int:
        return self.probs.shape[0]


def is_dag(a: AdjacencyMatrix | np.ndarray) -> bool:
    """Kahn's algorithm; True iff the graph admits a topological order."""
    ent = a.entries if isinstance(a, AdjacencyMatrix) else np.asarray(a)
    try:
        topological_sort(ent)
        return True
    except ValueError:
        return False


def topological_sort(a: AdjacencyMatrix | np.ndarray) -> list[int]:
    """Return one topological order (smallest node index first among ready nodes).

    Raises ValueError when the graph is cyclic.
    """
    ent = a.entries if isinstance(a, AdjacencyMatrix) else np.asarray(a)
    d = ent.shape[0]
    indeg = ent.sum(axis=0).astype(np.int64)
    ready = sorted(np.flatnonzero(indeg == 0).tolist())
    order: list[int] = []
    ready_set = list(ready)
    while ready_set:
        node = ready_set.pop(0)
        order.append(node)
        for nxt in np.flatnonzero(ent[node]).tolist():
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready_set.append(nxt)
    if len(order) != d:
        raise ValueError("graph contains a cycle")
    return order


def acyclicity_h(a: AdjacencyMatrix | np.ndarray) -> float:
    """trace(exp(A)) - d, the smooth acyclicity score.

    Zero (within ACYCLICITY_TOL) iff the graph is a DAG; grows with the number
    and length of cycles. The exponential is evaluated by scaling-and-squaring
    on a truncated power series: A is scaled by 2**s so its 1-norm is <= 1,
    the series is summed to max(2d, 20) terms (exact for nilpotent matrices
    since A^d = 0; remainder below 1/21! otherwise, well under the tolerance),
    and the result is squared s times.
    """
    ent = a.entries if isinstance(a, AdjacencyMatrix) else np.asarray(a)
    m = np.asarray(ent, dtype=np.float64)
    d = m.shape[0]
    if d == 0:
        return 0.0
    norm = float(np.abs(m).sum(axis=0).max())
    s = max(0, int(math.ceil(math.log2(norm)))) if norm > 1.0 else 0
    ms = m / (2.0**s)
    n_terms = max(2 * d, 20)
    expm = np.eye(d)
    term = np.eye(d)
    for k in range(1, n_terms + 1):
        term = term @ ms / k
        expm += term
    for _ in range(s):
        expm = expm @ expm
    return float(np.trace(expm) - d)


def threshold(p: ProbabilityMatrix, tau: float) -> AdjacencyMatrix:
    """Binarize edge probabilities: entry 1 iff probs[i][j] >= tau, i != j."""
    if not (0.0 < tau < 1.0):
        raise InputError(f"tau must lie strictly inside (0, 1), got {tau}")
    ent = (p.probs >= tau).astype(np.int8)
    np.fill_diagonal(ent, 0)
    return AdjacencyMatrix(entries=ent, node_names=p.node_names)


def _find_cycle(weights: np.ndarray) -> list[tuple[int, int]] | None:
    """First cycle found by DFS with node indices visited in ascending order.

    Returns the cycle as a list of edges, or None when the graph is acyclic.
    """
    d = weights.shape[0]
    adj = [np.flatnonzero(weights[i]).tolist() for i in range(d)]
    color = [0] * d  # 0 unvisited, 1 on current path, 2 done
    for root in range(d):
        if color[root] != 0:
            continue
        path = [root]
        stack = [(root, iter(adj[root]))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == 0:
                    color[nxt] = 1
                    path.append(nxt)
                    stack.append((nxt, iter(adj[nxt])))
                    advanced = True
                    break
                if color[nxt] == 1:
                    start = path.index(nxt)
                    nodes = path[start:]
                    return list(zip(nodes, nodes[1:])) + [(node, nxt)]
            if not advanced:
                color[node] = 2
                stack.pop()
                path.pop()
    return None


def remove_cycles(g: WeightedDigraph, rng: np.random.Generator) -> AdjacencyMatrix:
    """Delete a minimum-weight edge from some cycle until the graph is acyclic.

    Each iteration finds one cycle (deterministic DFS order) and removes one of
    its minimum-weight edges, ties broken uniformly via rng. The result is the
    binary support of the surviving edges; a DAG input comes back unchanged.
    """
    w = np.array(g.weights, dtype=np.float64)
    while True:
        cycle = _find_cycle(w)
        if cycle is None:
            break
        cw = np.array([w[u, v] for u, v in cycle])
        wmin = cw.min()
        candidates = [cycle[i] for i in np.flatnonzero(cw == wmin)]
        u, v = candidates[int(rng.integers(len(candidates)))] if len(candidates) > 1 else candidates[0]
        w[u, v] = 0.0
    return AdjacencyMatrix.from_array((w > 0).astype(np.int8), g.node_names)


def write_adjacency_csv(a: AdjacencyMatrix, path: str | Path, header: bool = True) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(a.node_names)
        for row in a.entries:
            writer.writerow([int(v) for v in row])


def _read_matrix_csv(path: str | Path, allowed: set[int]):
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise InputError(f"empty matrix file: {path}")

    def _numeric(row):
        try:
            vals = [int(float(v)) for v in row]
        except ValueError:
            return None
        return vals

    names = None
    first = _numeric(rows[0])
    if first is None:
        names = [v.strip() for v in rows[0]]
        rows = rows[1:]
    parsed = []
    for row in rows:
        vals = _numeric(row)
        if vals is None:
            raise InputError(f"non-numeric matrix row in {path}: {row!r}")
        parsed.append(vals)
    mat = np.asarray(parsed, dtype=np.int64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InputError(f"matrix in {path} must be square, got shape {mat.shape}")
    if not np.isin(mat, sorted(allowed)).all():
        raise InputError(f"matrix in {path} has entries outside {sorted(allowed)}")
    if names is not None and len(names) != mat.shape[0]:
        raise InputError(
            f"header of {path} names {len(names)} columns but matrix has {mat.shape[0]}"
        )
    return mat, names


def read_adjacency_csv(path: str | Path) -> AdjacencyMatrix:
    mat, names = _read_matrix_csv(path, allowed={0, 1})
    return AdjacencyMatrix.from_array(mat.astype(np.int8), names)
