"""Linear-Gaussian SEM generator with optional hidden confounders.

Used by the CLI's generate subcommand and by the test benches.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import Dataset
from .graph import AdjacencyMatrix, default_node_names, is_dag, topological_sort, write_adjacency_csv
from .scoring import PriorMatrix, write_prior_csv
from .features import write_dataset_csv
from .util import InputError, derive_rng, dump_json


@dataclass(frozen=True)
class SemSpec:
    """Ground-truth description of one synthetic system.

    weights[i][j] is the linear coefficient on X_i in the equation of X_j, so
    its support must equal the edge set of graph. confounders lists
    (hidden id, (i, j), strength) triples: each hidden standard-normal variable
    adds strength * U to both observed columns i and j.
    """

    graph: AdjacencyMatrix
    weights: np.ndarray
    noise_scale: np.ndarray
    m: int
    confounders: tuple[tuple[int, tuple[int, int], float], ...]
    seed: int

    def __post_init__(self):
        if not is_dag(self.graph):
            raise InputError("SEM graph must be acyclic")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != self.graph.entries.shape:
            raise InputError("weights shape must match the graph")
        if ((w != 0) != (self.graph.entries == 1)).any():
            raise InputError("weights support must equal the edge set")
        ns = np.asarray(self.noise_scale, dtype=np.float64)
        if ns.shape != (self.graph.d,) or (ns < 0).any() or not np.isfinite(ns).all():
            raise InputError("noise_scale must be one nonnegative value per node")
        if self.m < 2:
            raise InputError("m must be at least 2")
        conf = []
        for hid, pair, strength in self.confounders:
            i, j = pair
            if not (0 <= i < self.graph.d and 0 <= j < self.graph.d and i != j):
                raise InputError(f"confounder pair {pair} out of range")
            if not np.isfinite(strength):
                raise InputError("confounder strength must be finite")
            conf.append((int(hid), (int(i), int(j)), float(strength)))
        w.setflags(write=False)
        ns.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "noise_scale", ns)
        object.__setattr__(self, "confounders", tuple(conf))

    @property
    def d(self) -> int:
        return self.graph.d


def random_dag(d: int, expected_edges: float, rng: np.random.Generator) -> AdjacencyMatrix:
    """Random DAG: draw a uniform topological order, then include each
    order-respecting edge independently with probability
    expected_edges / (d * (d - 1) / 2)."""
    if d < 1:
        raise InputError("d must be at least 1")
    max_edges = d * (d - 1) / 2
    if not (0 <= expected_edges <= max_edges):
        raise InputError(f"expected_edges must lie in [0, {max_edges}], got {expected_edges}")
    order = rng.permutation(d)
    p = expected_edges / max_edges if max_edges > 0 else 0.0
    ent = np.zeros((d, d), dtype=np.int8)
    for a in range(d):
        for b in range(a + 1, d):
            if rng.random() < p:
                ent[order[a], order[b]] = 1
    return AdjacencyMatrix.from_array(ent)


def random_sem(
    d: int,
    expected_edges: float,
    m: int,
    seed: int,
    noise_scale: float = 1.0,
    n_confounders: int = 0,
    confounder_strength: float = 1.0,
    weight_low: float = 0.5,
    weight_high: float = 2.0,
) -> SemSpec:
    """Draw a full SemSpec: random DAG, signed edge weights with magnitudes in
    [weight_low, weight_high], and confounders over non-adjacent observed pairs."""
    rng = derive_rng(seed, "sem")
    graph = random_dag(d, expected_edges, rng)
    mags = rng.uniform(weight_low, weight_high, size=(d, d))
    signs = np.where(rng.random((d, d)) < 0.5, -1.0, 1.0)
    weights = mags * signs * graph.entries
    candidates = [
        (i, j)
        for i in range(d)
        for j in range(i + 1, d)
        if graph.entries[i, j] == 0 and graph.entries[j, i] == 0
    ]
    if n_confounders > len(candidates):
        raise InputError(f"cannot place {n_confounders} confounders on {len(candidates)} non-adjacent pairs")
    chosen = rng.choice(len(candidates), size=n_confounders, replace=False) if n_confounders else []
    confounders = tuple(
        (k, candidates[int(c)], float(confounder_strength)) for k, c in enumerate(chosen)
    )
    return SemSpec(
        graph=graph,
        weights=weights,
        noise_scale=np.full(d, float(noise_scale)),
        m=m,
        confounders=confounders,
        seed=seed,
    )


def chain_sem(d: int, m: int, seed: int, weight: float = 1.0, noise_scale: float = 1.0) -> SemSpec:
    """X0 -> X1 -> ... -> X(d-1) with a fixed edge weight; a common fixture."""
    ent = np.zeros((d, d), dtype=np.int8)
    for i in range(d - 1):
        ent[i, i + 1] = 1
    graph = AdjacencyMatrix.from_array(ent)
    weights = ent.astype(np.float64) * weight
    return SemSpec(
        graph=graph,
        weights=weights,
        noise_scale=np.full(d, float(noise_scale)),
        m=m,
        confounders=(),
        seed=seed,
    )


def simulate(spec: SemSpec, prior_fraction: float = 0.25) -> tuple[Dataset, AdjacencyMatrix, PriorMatrix]:
    """Sample the SEM and derive a partial prior from the true graph.

    Columns are generated in topological order: X_j is the weighted sum of its
    parents plus confounder contributions plus scaled standard-normal noise.
    The prior marks a prior_fraction share of the true edges (sampled without
    replacement) as 1 and leaves every other entry unspecified (-1).
    """
    if not (0.0 <= prior_fraction <= 1.0):
        raise InputError(f"prior_fraction must lie in [0, 1], got {prior_fraction}")
    d, m = spec.d, spec.m
    rng = derive_rng(spec.seed, "simulate")
    n_hidden = len(spec.confounders)
    hidden = rng.standard_normal((m, n_hidden)) if n_hidden else np.zeros((m, 0))
    noise = rng.standard_normal((m, d)) * spec.noise_scale
    x = np.zeros((m, d))
    for j in topological_sort(spec.graph):
        col = noise[:, j].copy()
        parents = np.flatnonzero(spec.graph.entries[:, j])
        if parents.size:
            col += x[:, parents] @ spec.weights[parents, j]
        for k, (ci, cj), strength in spec.confounders:
            if j in (ci, cj):
                col += strength * hidden[:, k]
        x[:, j] = col

    edges = spec.graph.edges()
    n_marked = int(round(prior_fraction * len(edges)))
    prior_entries = np.full((d, d), -1, dtype=np.int8)
    if n_marked:
        prior_rng = derive_rng(spec.seed, "prior")
        picked = prior_rng.choice(len(edges), size=n_marked, replace=False)
        for idx in picked:
            i, j = edges[int(idx)]
            prior_entries[i, j] = 1

    names = spec.graph.node_names
    data = Dataset(values=x, column_names=names, column_kinds=("continuous",) * d)
    prior = PriorMatrix(entries=prior_entries, node_names=names)
    return data, spec.graph, prior


def spec_to_dict(spec: SemSpec) -> dict:
    return {
        "d": spec.d,
        "m": spec.m,
        "seed": spec.seed,
        "node_names": list(spec.graph.node_names),
        "graph": spec.graph.entries.tolist(),
        "weights": spec.weights.tolist(),
        "noise_scale": spec.noise_scale.tolist(),
        "confounders": [
            {"hidden": hid, "pair": list(pair), "strength": strength}
            for hid, pair, strength in spec.confounders
        ],
    }


def write_sem_files(spec: SemSpec, out_dir: str | Path, prior_fraction: float = 0.25) -> dict[str, Path]:
    """Emit data.csv, truth.csv, prior.csv and the spec.json sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data, truth, prior = simulate(spec, prior_fraction)
    paths = {
        "data": out / "data.csv",
        "truth": out / "truth.csv",
        "prior": out / "prior.csv",
        "spec": out / "spec.json",
    }
    write_dataset_csv(data, paths["data"])
    write_adjacency_csv(truth, paths["truth"])
    write_prior_csv(prior, paths["prior"])
    sidecar = spec_to_dict(spec)
    sidecar["prior_fraction"] = prior_fraction
    dump_json(sidecar, paths["spec"])
    return paths
