"""Graph recovery metrics over ordered node pairs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import AdjacencyMatrix
from .util import InputError


@dataclass(frozen=True)
class EdgeConfusion:
    tp: int
    fp: int
    tn: int
    fn: int
    reversals: int


@dataclass(frozen=True)
class MetricReport:
    tpr: float
    fdr: float
    fpr: float
    shd: int
    tp_nnz: float
    rp: float | None
    nnz: int


def align(pred: AdjacencyMatrix, truth: AdjacencyMatrix) -> tuple[AdjacencyMatrix, AdjacencyMatrix]:
    """Reorder pred's nodes to truth's name order; name mismatches are errors."""
    if pred.d != truth.d:
        raise InputError(f"prediction has {pred.d} nodes but truth has {truth.d}")
    if pred.node_names == truth.node_names:
        return pred, truth
    if set(pred.node_names) != set(truth.node_names):
        missing = set(truth.node_names) ^ set(pred.node_names)
        raise InputError(f"node names do not match between graphs: {sorted(missing)}")
    perm = [pred.node_names.index(n) for n in truth.node_names]
    ent = pred.entries[np.ix_(perm, perm)]
    return AdjacencyMatrix.from_array(ent, truth.node_names), truth


def confusion(pred: AdjacencyMatrix, truth: AdjacencyMatrix) -> EdgeConfusion:
    """Counts over the d*(d-1) ordered off-diagonal pairs.

    A reversal is a predicted edge whose opposite orientation is the true one:
    pred[i][j] = 1, truth[i][j] = 0, truth[j][i] = 1. Reversals are a subset of
    the false positives.
    """
    pred, truth = align(pred, truth)
    p = pred.entries.astype(bool)
    t = truth.entries.astype(bool)
    off = ~np.eye(pred.d, dtype=bool)
    tp = int((p & t)[off].sum())
    fp = int((p & ~t)[off].sum())
    fn = int((~p & t)[off].sum())
    tn = int((~p & ~t)[off].sum())
    reversals = int((p & ~t & t.T)[off].sum())
    return EdgeConfusion(tp=tp, fp=fp, tn=tn, fn=fn, reversals=reversals)


def shd(pred: AdjacencyMatrix, truth: AdjacencyMatrix) -> int:
    """Structural Hamming distance; a reversed edge counts once, not twice.

    Extra edges cost one deletion, missing edges one addition, and a reversal
    one orientation flip. The miss that pairs with a counted reversal is not
    billed again.
    """
    pred, truth = align(pred, truth)
    p = pred.entries.astype(bool)
    t = truth.entries.astype(bool)
    off = ~np.eye(pred.d, dtype=bool)
    fp_pos = p & ~t & off
    fn_pos = ~p & t & off
    reversals = int((fp_pos & t.T).sum())
    fn_excused = fn_pos & fp_pos.T
    fp = int(fp_pos.sum())
    fn_rest = int((fn_pos & ~fn_excused).sum())
    return (fp - reversals) + fn_rest + reversals


def tpr(pred: AdjacencyMatrix, truth: AdjacencyMatrix) -> float:
    c = confusion(pred, truth)
    return c.tp / (c.tp + c.fn) if (c.tp + c.fn) else 0.0


def tp_nnz(pred: AdjacencyMatrix, truth: AdjacencyMatrix) -> float:
    """True positives over predicted edge count; 0 for an empty prediction."""
    c = confusion(pred, truth)
    nnz = c.tp + c.fp
    return c.tp / nnz if nnz else 0.0


def rp(model_tp_nnz: float, cohort) -> float | None:
    """Relative precision gap (best - x) / best against a cohort of TP/NNZ
    scores. None when the cohort best is 0 (the gap is undefined)."""
    cohort = list(cohort)
    if not cohort:
        raise InputError("rp needs a nonempty cohort")
    best = max(cohort)
    if best <= 0.0:
        return None
    return (best - model_tp_nnz) / best


def report(pred: AdjacencyMatrix, truth: AdjacencyMatrix, cohort=None) -> MetricReport:
    """All metrics at once. When a cohort is given, the model's own TP/NNZ
    joins it for the RP baseline, so rp stays in [0, 1]."""
    c = confusion(pred, truth)
    nnz = c.tp + c.fp
    tpr_val = c.tp / (c.tp + c.fn) if (c.tp + c.fn) else 0.0
    fdr_val = c.fp / nnz if nnz else 0.0
    fpr_val = c.fp / (c.fp + c.tn) if (c.fp + c.tn) else 0.0
    tp_nnz_val = c.tp / nnz if nnz else 0.0
    rp_val = None
    if cohort is not None:
        rp_val = rp(tp_nnz_val, list(cohort) + [tp_nnz_val])
    return MetricReport(
        tpr=tpr_val,
        fdr=fdr_val,
        fpr=fpr_val,
        shd=shd(pred, truth),
        tp_nnz=tp_nnz_val,
        rp=rp_val,
        nnz=nnz,
    )


def report_to_dict(r: MetricReport, d: int, seed: int | None = None) -> dict:
    """Stable JSON payload; key order is fixed by sorted dumping downstream."""
    return {
        "tpr": r.tpr,
        "fdr": r.fdr,
        "fpr": r.fpr,
        "shd": r.shd,
        "tp_nnz": r.tp_nnz,
        "rp": r.rp,
        "nnz": r.nnz,
        "d": d,
        "seed": seed,
    }
