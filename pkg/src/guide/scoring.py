"""Composite reward: BIC data fit plus acyclicity and prior-disagreement penalties.

The reward is a cost (lower is better). Node j's regression always includes an
intercept; a parentless node is fit intercept-only, so its RSS is the centered
sum of squares.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import Dataset
from .graph import AdjacencyMatrix, acyclicity_h, default_node_names, is_dag, _read_matrix_csv
from .util import InputError

LOG_CLAMP = 1e-12
SCORE_VARIANTS = ("equal", "different")


@dataclass
class RewardConfig:
    lambda1: float = 1.0
    lambda2: float = 2.0
    beta: float = 0.5
    tau_calibration: float = 0.0
    calibration_enabled: bool = False
    calibration_window: int = 10
    score_variant: str = "equal"

    def validate(self) -> None:
        if self.lambda1 < 0 or self.lambda2 < 0 or self.beta < 0:
            raise InputError("penalty weights lambda1, lambda2, beta must be nonnegative")
        if self.score_variant not in SCORE_VARIANTS:
            raise InputError(f"score_variant must be one of {SCORE_VARIANTS}, got {self.score_variant!r}")
        if self.calibration_window < 1:
            raise InputError("calibration_window must be >= 1")


@dataclass(frozen=True)
class PriorMatrix:
    """Partial edge beliefs: 1 asserted edge, 0 asserted non-edge, -1 unspecified."""

    entries: np.ndarray
    node_names: tuple[str, ...]

    def __post_init__(self):
        ent = np.asarray(self.entries)
        if ent.ndim != 2 or ent.shape[0] != ent.shape[1]:
            raise InputError(f"prior matrix must be square, got shape {ent.shape}")
        if not np.isin(ent, (-1, 0, 1)).all():
            raise InputError("prior entries must be -1, 0 or 1")
        if (np.diag(ent) == 1).any():
            raise InputError("prior diagonal must be -1 or 0 (no self-loops)")
        ent = ent.astype(np.int8)
        ent.setflags(write=False)
        object.__setattr__(self, "entries", ent)
        names = tuple(str(n) for n in self.node_names)
        if len(names) != ent.shape[0] or len(set(names)) != ent.shape[0]:
            raise InputError("node names must be unique and match the matrix size")
        object.__setattr__(self, "node_names", names)

    @classmethod
    def unspecified(cls, d: int, node_names=None) -> "PriorMatrix":
        names = node_names if node_names is not None else default_node_names(d)
        return cls(entries=np.full((d, d), -1, dtype=np.int8), node_names=names)

    @classmethod
    def from_adjacency(cls, a: AdjacencyMatrix) -> "PriorMatrix":
        return cls(entries=a.entries.astype(np.int8), node_names=a.node_names)

    @classmethod
    def from_array(cls, arr, node_names=None) -> "PriorMatrix":
        arr = np.asarray(arr)
        names = node_names if node_names is not None else default_node_names(arr.shape[0])
        return cls(entries=arr, node_names=names)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    def merge(self, initial: "PriorMatrix | None") -> "PriorMatrix":
        """Specified entries win; unspecified entries fall back to the initial
        {0,1} matrix when one is supplied, else stay unspecified."""
        if initial is None:
            return self
        if initial.d != self.d:
            raise InputError(f"prior is {self.d}x{self.d} but initial graph is {initial.d}x{initial.d}")
        merged = np.where(self.entries == -1, initial.entries, self.entries)
        np.fill_diagonal(merged, np.diag(self.entries))
        return PriorMatrix(entries=merged, node_names=self.node_names)

    def asserted_edge_mask(self) -> np.ndarray:
        mask = self.entries == 1
        np.fill_diagonal(mask, False)
        return mask

    def as_zero_one(self) -> np.ndarray:
        """Unspecified entries mapped to 0; used as encoder input."""
        out = np.where(self.entries == 1, 1, 0).astype(np.int8)
        np.fill_diagonal(out, 0)
        return out


@dataclass(frozen=True)
class RewardBreakdown:
    bic: float
    acyclicity: float
    prior: float
    total: float
    bic_degenerate: bool = False


class BicScorer:
    """Per-dataset BIC evaluator.

    OLS statistics come from the Gram matrix of the intercept-augmented data,
    so scoring a graph costs O(k^3) per node in its parent count k rather than
    O(m k^2); RSS values are cached per (node, parent set).
    """

    def __init__(self, x: Dataset, variant: str = "equal"):
        if variant not in SCORE_VARIANTS:
            raise InputError(f"score_variant must be one of {SCORE_VARIANTS}, got {variant!r}")
        self.variant = variant
        self.m = x.m
        self.d = x.d
        aug = np.hstack([x.values, np.ones((x.m, 1))])
        self._gram = aug.T @ aug
        self._cache: dict[tuple[int, tuple[int, ...]], float] = {}

    def rss(self, node: int, parents: tuple[int, ...]) -> float:
        """Residual sum of squares of node regressed on parents plus intercept.

        Solves the normal equations; falls back to a minimum-norm solution for
        collinear parent sets, so it never fails.
        """
        key = (node, parents)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        idx = list(parents) + [self.d]
        s = self._gram[np.ix_(idx, idx)]
        b = self._gram[idx, node]
        try:
            beta = np.linalg.solve(s, b)
            if not np.isfinite(beta).all():
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            beta = np.linalg.pinv(s) @ b
        val = float(self._gram[node, node] - beta @ b)
        if not math.isfinite(val):
            beta = np.linalg.pinv(s) @ b
            val = float(self._gram[node, node] - beta @ b)
        val = max(val, 0.0)
        self._cache[key] = val
        return val

    def node_rss(self, entries: np.ndarray) -> np.ndarray:
        return np.array(
            [self.rss(j, tuple(np.flatnonzero(entries[:, j]).tolist())) for j in range(self.d)]
        )

    def bic(self, a: AdjacencyMatrix | np.ndarray) -> tuple[float, bool]:
        """(BIC value, degenerate flag). The flag marks a clamped zero-RSS log."""
        entries = a.entries if isinstance(a, AdjacencyMatrix) else np.asarray(a)
        rss = self.node_rss(entries)
        edges = int(entries.sum())
        logm = math.log(self.m)
        if self.variant == "equal":
            arg = rss.sum() / (self.m * self.d)
            degenerate = bool(arg < LOG_CLAMP)
            return self.m * self.d * math.log(max(arg, LOG_CLAMP)) + edges * logm, degenerate
        args = rss / self.m
        degenerate = bool((args < LOG_CLAMP).any())
        val = float(self.m * np.log(np.maximum(args, LOG_CLAMP)).sum()) + edges * logm
        return val, degenerate


def bic_penalty(x: Dataset, a: AdjacencyMatrix, variant: str = "equal") -> float:
    val, _ = BicScorer(x, variant).bic(a)
    return val


def acyclicity_penalty(a: AdjacencyMatrix, cfg: RewardConfig) -> float:
    """lambda1 * h(A) + lambda2 * [A cyclic]. Exactly zero for DAGs."""
    if is_dag(a):
        return 0.0
    return cfg.lambda1 * acyclicity_h(a) + cfg.lambda2


def prior_penalty(a: AdjacencyMatrix, prior: PriorMatrix, cfg: RewardConfig) -> float:
    """beta times the number of specified prior entries the graph contradicts.

    Unspecified (-1) entries never contribute, so an all-unspecified prior
    reduces the reward to data fit plus acyclicity.
    """
    if prior.d != a.d:
        raise InputError(f"graph is {a.d}x{a.d} but prior is {prior.d}x{prior.d}")
    specified = prior.entries != -1
    np.fill_diagonal(specified, False)
    disagreements = int((a.entries[specified] != prior.entries[specified]).sum())
    return cfg.beta * disagreements


def evaluate_reward(
    scorer: BicScorer, a: AdjacencyMatrix, prior: PriorMatrix, cfg: RewardConfig
) -> RewardBreakdown:
    bic, degenerate = scorer.bic(a)
    acyc = acyclicity_penalty(a, cfg)
    pri = prior_penalty(a, prior, cfg)
    return RewardBreakdown(
        bic=bic, acyclicity=acyc, prior=pri, total=bic + acyc + pri, bic_degenerate=degenerate
    )


def total_reward(x: Dataset, a: AdjacencyMatrix, prior: PriorMatrix, cfg: RewardConfig) -> RewardBreakdown:
    return evaluate_reward(BicScorer(x, cfg.score_variant), a, prior, cfg)


def prior_delta_bic(scorer: BicScorer, a: AdjacencyMatrix, prior: PriorMatrix) -> float:
    """Held-out BIC gap between the prior-asserted subgraph and the current
    graph stripped of those edges.

    Positive values mean the data is explained better without the prior's
    edges than by them, i.e. the prior is not pulling its weight.
    """
    asserted = prior.asserted_edge_mask()
    prior_only = np.zeros((a.d, a.d), dtype=np.int8)
    prior_only[asserted] = 1
    stripped = np.array(a.entries)
    stripped[asserted] = 0
    with_prior, _ = scorer.bic(prior_only)
    without_prior, _ = scorer.bic(stripped)
    return with_prior - without_prior


def calibrate_beta(history, beta0: float, cfg: RewardConfig) -> float:
    """beta0 while prior edges keep earning their place, 0 otherwise.

    history holds (graph, delta_bic) pairs measured on the held-out split; the
    mean of the trailing calibration window is compared against
    tau_calibration. Disabled calibration always returns beta0.
    """
    if not cfg.calibration_enabled:
        return beta0
    if len(history) == 0:
        raise InputError("calibrate_beta needs a nonempty history")
    window = history[-cfg.calibration_window :]
    mean_delta = float(np.mean([delta for _, delta in window]))
    return beta0 if mean_delta < cfg.tau_calibration else 0.0


def write_prior_csv(p: PriorMatrix, path: str | Path, header: bool = True) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(p.node_names)
        for row in p.entries:
            writer.writerow([int(v) for v in row])


def read_prior_csv(path: str | Path) -> PriorMatrix:
    mat, names = _read_matrix_csv(path, allowed={-1, 0, 1})
    return PriorMatrix.from_array(mat.astype(np.int8), names)
