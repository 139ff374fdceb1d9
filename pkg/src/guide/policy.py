"""Edge-probability policy network and its REINFORCE training loop.

Two encoders feed a pairwise scoring head. The data encoder is a two-layer
ReLU perceptron (widths [feature_width, 128, 64], dropout 0.2 during training)
over the per-node feature matrix. The prior encoder is a two-layer gated
perceptron, out = sigmoid(Wg x + bg) * tanh(Wh x + bh), over per-node degree
statistics of the initial {0,1} prior graph concatenated with a learned
per-node embedding. The fused d x 128 representation is projected once as
source and once as target; the elementwise product of source row i and target
row j feeds a [128, 64, 1] head that yields the logit of edge i -> j.

All gradients are computed analytically in numpy; there is no autodiff
dependency. With every parameter at zero, each off-diagonal edge probability
is exactly sigmoid(0) = 0.5.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path

import numpy as np

from .features import Dataset, NodeFeatureMatrix, compute_features, standardize
from .graph import (
    AdjacencyMatrix,
    ProbabilityMatrix,
    WeightedDigraph,
    remove_cycles,
    threshold,
)
from .scoring import (
    BicScorer,
    PriorMatrix,
    RewardConfig,
    calibrate_beta,
    prior_delta_bic,
)
from .util import InputError, derive_rng

CHECKPOINT_MAGIC = "GUIDE-CKPT-v1"
DROPOUT_RATE = 0.2
BASELINE_DECAY = 0.99
PROB_CLAMP = 1e-7
EMBED_DIM = 16
H_DATA = 64
FUSED = 2 * H_DATA

# Fixed iteration order for init, clipping, optimizer state and checkpoints.
PARAM_ORDER = (
    "e1.w1", "e1.b1", "e1.w2", "e1.b2",
    "e2.emb", "e2.wg1", "e2.bg1", "e2.wh1", "e2.bh1",
    "e2.wg2", "e2.bg2", "e2.wh2", "e2.bh2",
    "fusion.w_src", "fusion.b_src", "fusion.w_tgt", "fusion.b_tgt",
    "fusion.w_h1", "fusion.b_h1", "fusion.w_h2", "fusion.b_h2",
)


@dataclass
class TrainConfig:
    num_epochs: int = 10
    batch_size: int = 64
    learning_rate: float = 1e-3
    gamma: float = 0.99  # reserved: episodes are one sampled graph, never discounted
    max_steps: int = 100
    grad_clip_norm: float = 0.5
    tau: float = 0.5
    seed: int = 0
    threads: int = 1

    def validate(self) -> None:
        if self.num_epochs < 1 or self.max_steps < 1 or self.batch_size < 1:
            raise InputError("num_epochs, max_steps and batch_size must be positive")
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be positive")
        if self.grad_clip_norm <= 0:
            raise InputError("grad_clip_norm must be positive")
        if not (0.0 < self.tau < 1.0):
            raise InputError(f"tau must lie strictly inside (0, 1), got {self.tau}")
        if self.seed < 0:
            raise InputError("seed must be nonnegative")
        if self.threads < 1:
            raise InputError("threads must be >= 1")


@dataclass
class PolicyModel:
    d: int
    feat_width: int
    embed_dim: int
    params: dict[str, np.ndarray]

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        return {k: v.shape for k, v in self.params.items()}


def _param_shapes(d: int, feat_width: int, embed_dim: int) -> dict[str, tuple[int, ...]]:
    gin = 4 + embed_dim
    return {
        "e1.w1": (feat_width, 128), "e1.b1": (128,),
        "e1.w2": (128, H_DATA), "e1.b2": (H_DATA,),
        "e2.emb": (d, embed_dim),
        "e2.wg1": (gin, H_DATA), "e2.bg1": (H_DATA,),
        "e2.wh1": (gin, H_DATA), "e2.bh1": (H_DATA,),
        "e2.wg2": (H_DATA, H_DATA), "e2.bg2": (H_DATA,),
        "e2.wh2": (H_DATA, H_DATA), "e2.bh2": (H_DATA,),
        "fusion.w_src": (FUSED, FUSED), "fusion.b_src": (FUSED,),
        "fusion.w_tgt": (FUSED, FUSED), "fusion.b_tgt": (FUSED,),
        "fusion.w_h1": (FUSED, H_DATA), "fusion.b_h1": (H_DATA,),
        "fusion.w_h2": (H_DATA, 1), "fusion.b_h2": (1,),
    }


def init_policy(d: int, feat_width: int, rng: np.random.Generator, embed_dim: int = EMBED_DIM) -> PolicyModel:
    """Xavier-uniform weight matrices (embedding table included), zero biases."""
    if d < 2:
        raise InputError("policy needs at least 2 nodes")
    params: dict[str, np.ndarray] = {}
    for name, shape in _param_shapes(d, feat_width, embed_dim).items():
        if len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            limit = math.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-limit, limit, size=shape)
    return PolicyModel(d=d, feat_width=feat_width, embed_dim=embed_dim, params=params)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -x))


def _prior_degree_features(prior01: np.ndarray) -> np.ndarray:
    """Per node: in-degree, out-degree, row sum, column sum of the initial
    graph, scaled by 1/(d-1) to keep gate preactivations in range."""
    a = np.asarray(prior01, dtype=np.float64)
    indeg = a.sum(axis=0)
    outdeg = a.sum(axis=1)
    scale = max(1.0, a.shape[0] - 1.0)
    return np.stack([indeg, outdeg, outdeg, indeg], axis=1) / scale


def _forward(
    model: PolicyModel,
    feats: NodeFeatureMatrix,
    prior01: np.ndarray,
    dropout_rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict]:
    """Return (edge probabilities, cache of intermediates for backprop).

    Dropout only fires when dropout_rng is supplied (training); inference is
    deterministic.
    """
    p = model.params
    d = model.d
    x = feats.rows
    if x.shape != (d, model.feat_width):
        raise InputError(f"feature matrix shape {x.shape} does not match model ({d}, {model.feat_width})")

    a1 = x @ p["e1.w1"] + p["e1.b1"]
    r1 = np.maximum(a1, 0.0)
    if dropout_rng is not None:
        m1 = (dropout_rng.random(r1.shape) >= DROPOUT_RATE) / (1.0 - DROPOUT_RATE)
        m2_shape_rng = dropout_rng
    else:
        m1 = np.ones_like(r1)
        m2_shape_rng = None
    d1 = r1 * m1
    a2 = d1 @ p["e1.w2"] + p["e1.b2"]
    r2 = np.maximum(a2, 0.0)
    if m2_shape_rng is not None:
        m2 = (m2_shape_rng.random(r2.shape) >= DROPOUT_RATE) / (1.0 - DROPOUT_RATE)
    else:
        m2 = np.ones_like(r2)
    h_data = r2 * m2

    deg = _prior_degree_features(prior01)
    pin = np.hstack([deg, p["e2.emb"]])
    zg1 = pin @ p["e2.wg1"] + p["e2.bg1"]
    zh1 = pin @ p["e2.wh1"] + p["e2.bh1"]
    g1 = _sigmoid(zg1)
    t1 = np.tanh(zh1)
    u1 = g1 * t1
    zg2 = u1 @ p["e2.wg2"] + p["e2.bg2"]
    zh2 = u1 @ p["e2.wh2"] + p["e2.bh2"]
    g2 = _sigmoid(zg2)
    t2 = np.tanh(zh2)
    h_prior = g2 * t2

    h = np.hstack([h_data, h_prior])
    s = h @ p["fusion.w_src"] + p["fusion.b_src"]
    t = h @ p["fusion.w_tgt"] + p["fusion.b_tgt"]
    z = s[:, None, :] * t[None, :, :]
    zf1 = z @ p["fusion.w_h1"] + p["fusion.b_h1"]
    f1 = np.maximum(zf1, 0.0)
    logits = (f1 @ p["fusion.w_h2"])[:, :, 0] + p["fusion.b_h2"][0]
    probs = _sigmoid(logits)
    np.fill_diagonal(probs, 0.0)

    cache = {
        "x": x, "a1": a1, "m1": m1, "d1": d1, "a2": a2, "m2": m2,
        "pin": pin, "g1": g1, "t1": t1, "u1": u1, "g2": g2, "t2": t2,
        "h": h, "s": s, "t": t, "z": z, "zf1": zf1, "f1": f1, "probs": probs,
    }
    return probs, cache


def forward(model: PolicyModel, feats: NodeFeatureMatrix, prior_init: PriorMatrix | None) -> ProbabilityMatrix:
    """Inference-mode edge probabilities (no dropout)."""
    prior01 = prior_init.as_zero_one() if prior_init is not None else np.zeros((model.d, model.d), dtype=np.int8)
    probs, _ = _forward(model, feats, prior01)
    return ProbabilityMatrix.from_array(probs)


def _backward(model: PolicyModel, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Analytic gradients of a scalar loss with given d loss / d logits."""
    p = model.params
    grads: dict[str, np.ndarray] = {}

    f1, zf1, z = cache["f1"], cache["zf1"], cache["z"]
    grads["fusion.w_h2"] = (f1 * dlogits[:, :, None]).sum(axis=(0, 1))[:, None]
    grads["fusion.b_h2"] = np.array([dlogits.sum()])
    df1 = dlogits[:, :, None] * p["fusion.w_h2"][None, None, :, 0]
    dzf1 = df1 * (zf1 > 0)
    grads["fusion.w_h1"] = z.reshape(-1, z.shape[-1]).T @ dzf1.reshape(-1, dzf1.shape[-1])
    grads["fusion.b_h1"] = dzf1.sum(axis=(0, 1))
    dz = dzf1 @ p["fusion.w_h1"].T

    s, t, h = cache["s"], cache["t"], cache["h"]
    ds = (dz * t[None, :, :]).sum(axis=1)
    dt = (dz * s[:, None, :]).sum(axis=0)
    grads["fusion.w_src"] = h.T @ ds
    grads["fusion.b_src"] = ds.sum(axis=0)
    grads["fusion.w_tgt"] = h.T @ dt
    grads["fusion.b_tgt"] = dt.sum(axis=0)
    dh = ds @ p["fusion.w_src"].T + dt @ p["fusion.w_tgt"].T
    dh_data = dh[:, :H_DATA]
    dh_prior = dh[:, H_DATA:]

    a2, m2, d1, a1, m1, x = cache["a2"], cache["m2"], cache["d1"], cache["a1"], cache["m1"], cache["x"]
    da2 = dh_data * m2 * (a2 > 0)
    grads["e1.w2"] = d1.T @ da2
    grads["e1.b2"] = da2.sum(axis=0)
    da1 = (da2 @ p["e1.w2"].T) * m1 * (a1 > 0)
    grads["e1.w1"] = x.T @ da1
    grads["e1.b1"] = da1.sum(axis=0)

    g2, t2, u1, g1, t1, pin = cache["g2"], cache["t2"], cache["u1"], cache["g1"], cache["t1"], cache["pin"]
    dzg2 = dh_prior * t2 * g2 * (1.0 - g2)
    dzh2 = dh_prior * g2 * (1.0 - t2**2)
    grads["e2.wg2"] = u1.T @ dzg2
    grads["e2.bg2"] = dzg2.sum(axis=0)
    grads["e2.wh2"] = u1.T @ dzh2
    grads["e2.bh2"] = dzh2.sum(axis=0)
    du1 = dzg2 @ p["e2.wg2"].T + dzh2 @ p["e2.wh2"].T
    dzg1 = du1 * t1 * g1 * (1.0 - g1)
    dzh1 = du1 * g1 * (1.0 - t1**2)
    grads["e2.wg1"] = pin.T @ dzg1
    grads["e2.bg1"] = dzg1.sum(axis=0)
    grads["e2.wh1"] = pin.T @ dzh1
    grads["e2.bh1"] = dzh1.sum(axis=0)
    dpin = dzg1 @ p["e2.wg1"].T + dzh1 @ p["e2.wh1"].T
    grads["e2.emb"] = dpin[:, 4:]
    return grads


def sample_graph(p: ProbabilityMatrix, rng: np.random.Generator) -> AdjacencyMatrix:
    """Independent Bernoulli draw per ordered pair; the diagonal stays zero."""
    u = rng.random((p.d, p.d))
    ent = (u < p.probs).astype(np.int8)
    np.fill_diagonal(ent, 0)
    return AdjacencyMatrix.from_array(ent, p.node_names)


def log_prob(p: ProbabilityMatrix, a: AdjacencyMatrix) -> float:
    """Bernoulli log-likelihood of the graph, probabilities clamped away from
    0 and 1 so asserted-certain entries cannot produce infinities."""
    if p.d != a.d:
        raise InputError(f"probability matrix is {p.d}x{p.d} but graph is {a.d}x{a.d}")
    pc = np.clip(p.probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    off = ~np.eye(p.d, dtype=bool)
    ent = a.entries.astype(np.float64)
    ll = ent * np.log(pc) + (1.0 - ent) * np.log(1.0 - pc)
    return float(ll[off].sum())


def _batch_log_probs(probs: np.ndarray, graphs: np.ndarray) -> np.ndarray:
    pc = np.clip(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    off = ~np.eye(probs.shape[0], dtype=bool)
    lp1 = np.log(pc)
    lp0 = np.log(1.0 - pc)
    base = lp0[off].sum()
    diff = np.where(off, lp1 - lp0, 0.0)
    return graphs.reshape(graphs.shape[0], -1) @ diff.ravel() + base


def _surrogate_dlogits(probs: np.ndarray, graphs: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """d/d logits of mean_b coeffs_b * log_prob(graph_b): mean_b c_b (a_b - p)."""
    b = graphs.shape[0]
    weighted = (coeffs[:, None, None] * graphs).sum(axis=0) / b
    dlogits = weighted - coeffs.mean() * probs
    np.fill_diagonal(dlogits, 0.0)
    return dlogits


def surrogate_loss(
    model: PolicyModel,
    feats: NodeFeatureMatrix,
    prior01: np.ndarray,
    graphs: np.ndarray,
    coeffs: np.ndarray,
    dropout_seed: int | None = None,
) -> float:
    """mean_b coeffs_b * log_prob(graphs_b) under the current parameters.

    Passing the same dropout_seed reproduces identical masks, which makes the
    value finite-difference friendly.
    """
    rng = derive_rng(dropout_seed, "dropout-check") if dropout_seed is not None else None
    probs, _ = _forward(model, feats, prior01, dropout_rng=rng)
    return float((coeffs * _batch_log_probs(probs, graphs)).mean())


def surrogate_gradients(
    model: PolicyModel,
    feats: NodeFeatureMatrix,
    prior01: np.ndarray,
    graphs: np.ndarray,
    coeffs: np.ndarray,
    dropout_seed: int | None = None,
) -> dict[str, np.ndarray]:
    rng = derive_rng(dropout_seed, "dropout-check") if dropout_seed is not None else None
    probs, cache = _forward(model, feats, prior01, dropout_rng=rng)
    return _backward(model, cache, _surrogate_dlogits(probs, graphs, coeffs))


class Adam:
    """Adaptive first-order optimizer; lr is mutable so the loop can halve it."""

    def __init__(self, shapes: dict[str, tuple[int, ...]], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros(s) for k, s in shapes.items()}
        self.v = {k: np.zeros(s) for k, s in shapes.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for k in PARAM_ORDER:
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] = params[k] - self.lr * (self.m[k] / b1c) / (np.sqrt(self.v[k] / b2c) + self.eps)


def _clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > max_norm and total > 0:
        scale = max_norm / total
        return {k: g * scale for k, g in grads.items()}
    return grads


@dataclass
class SearchState:
    """Carries the search outcome and the bookkeeping the manifest reports."""

    best_graph: AdjacencyMatrix | None
    best_total: float
    baseline: float | None
    step_count: int
    rng: np.random.Generator
    trace: list[float] = field(default_factory=list)
    beta_trace: list[float] = field(default_factory=list)
    delta_history: list = field(default_factory=list)
    aborted_steps: int = 0
    lr_halved: bool = False


def _split_dataset(x: Dataset, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic 80/20 row split for calibration held-out scoring."""
    perm = derive_rng(seed, "split").permutation(x.m)
    cut = int(math.floor(0.8 * x.m))
    train_rows = np.sort(perm[:cut])
    held_rows = np.sort(perm[cut:])
    if held_rows.size < 2 or train_rows.size < 2:
        raise InputError(f"dataset with {x.m} rows is too small for an 80/20 calibration split")
    mk = lambda rows: Dataset(
        values=x.values[rows],
        column_names=x.column_names,
        column_kinds=x.column_kinds,
    )
    return mk(train_rows), mk(held_rows)


def train(
    x: Dataset,
    prior: PriorMatrix,
    prior_init: PriorMatrix | None,
    cfg: TrainConfig,
    rcfg: RewardConfig,
) -> tuple[SearchState, PolicyModel]:
    """REINFORCE search for a low-cost DAG.

    Each step: one forward pass, batch_size Bernoulli graph samples, cycle
    removal per sample, reward evaluation, then a baseline-centered policy
    gradient step. Every scored graph is acyclic, so the acyclicity penalty
    contributes zero during training and the reward reduces to BIC plus the
    prior term. Beta recalibration runs between epochs when enabled.
    """
    from .graph import _find_cycle  # local import to keep the hot loop tight

    cfg.validate()
    rcfg.validate()
    if prior.d != x.d:
        raise InputError(f"dataset has {x.d} columns but prior is {prior.d}x{prior.d}")
    if prior_init is not None and prior_init.d != x.d:
        raise InputError(f"dataset has {x.d} columns but initial graph is {prior_init.d}x{prior_init.d}")

    d = x.d
    seed = cfg.seed
    names = x.column_names
    feats = compute_features(standardize(x))
    prior01 = prior_init.as_zero_one() if prior_init is not None else np.zeros((d, d), dtype=np.int8)

    if rcfg.calibration_enabled:
        train_split, held_split = _split_dataset(x, seed)
        scorer = BicScorer(train_split, rcfg.score_variant)
        held_scorer = BicScorer(held_split, rcfg.score_variant)
    else:
        scorer = BicScorer(x, rcfg.score_variant)
        held_scorer = None

    rcfg_run = replace(rcfg)  # the loop mutates only this copy
    model = init_policy(d, feats.width, derive_rng(seed, "init"))
    adam = Adam(model.param_shapes(), cfg.learning_rate)
    state = SearchState(
        best_graph=None,
        best_total=math.inf,
        baseline=None,
        step_count=0,
        rng=derive_rng(seed, "post"),
    )

    specified = prior.entries != -1
    np.fill_diagonal(specified, False)
    prior_vals = prior.entries[specified]

    def remove_cycles_fast(raw: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        w = raw.astype(np.float64)
        while True:
            cycle = _find_cycle(w)
            if cycle is None:
                return (w > 0).astype(np.int8)
            cw = np.array([w[u, v] for u, v in cycle])
            wmin = cw.min()
            cands = [cycle[i] for i in np.flatnonzero(cw == wmin)]
            u, v = cands[int(rng.integers(len(cands)))] if len(cands) > 1 else cands[0]
            w[u, v] = 0.0

    def eval_one(args) -> tuple[np.ndarray, float]:
        raw, rng = args
        dag = remove_cycles_fast(raw, rng)
        bic, _ = scorer.bic(dag)
        disagreements = int((dag[specified] != prior_vals).sum()) if rcfg_run.beta else 0
        return dag, bic + rcfg_run.beta * disagreements

    pool = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    try:
        for epoch in range(cfg.num_epochs):
            for step in range(cfg.max_steps):
                drop_rng = derive_rng(seed, "dropout", epoch, step)
                probs, cache = _forward(model, feats, prior01, dropout_rng=drop_rng)
                srng = derive_rng(seed, "sample", epoch, step)
                u = srng.random((cfg.batch_size, d, d))
                graphs = (u < probs[None, :, :]).astype(np.int8)

                jobs = [
                    (graphs[b], derive_rng(seed, "cycles", epoch, step, b))
                    for b in range(cfg.batch_size)
                ]
                results = list(pool.map(eval_one, jobs)) if pool else [eval_one(j) for j in jobs]
                dags = np.stack([r[0] for r in results])
                totals = np.array([r[1] for r in results])

                batch_best = int(np.argmin(totals))
                if totals[batch_best] < state.best_total:
                    state.best_total = float(totals[batch_best])
                    state.best_graph = AdjacencyMatrix.from_array(dags[batch_best], names)

                if state.baseline is None:
                    state.baseline = float(totals.mean())
                advantages = totals - state.baseline

                logps = _batch_log_probs(probs, graphs)
                loss = float((advantages * logps).mean())
                # Score-function gradient against the raw Bernoulli samples;
                # cycle repair is part of the environment, not the policy.
                dlogits = _surrogate_dlogits(probs, graphs, advantages)
                grads = _backward(model, cache, dlogits)
                finite = math.isfinite(loss) and all(np.isfinite(g).all() for g in grads.values())
                if not finite:
                    state.aborted_steps += 1
                    if not state.lr_halved:
                        adam.lr = adam.lr / 2.0
                        state.lr_halved = True
                else:
                    grads = _clip_global_norm(grads, cfg.grad_clip_norm)
                    adam.step(model.params, grads)

                state.baseline = BASELINE_DECAY * state.baseline + (1.0 - BASELINE_DECAY) * float(totals.mean())
                state.step_count += 1
                state.trace.append(state.best_total)

                if rcfg.calibration_enabled:
                    best_dag = AdjacencyMatrix.from_array(dags[batch_best], names)
                    delta = prior_delta_bic(held_scorer, best_dag, prior)
                    state.delta_history.append((best_dag, delta))

            if rcfg.calibration_enabled and state.delta_history:
                rcfg_run.beta = calibrate_beta(state.delta_history, rcfg.beta, rcfg)
            state.beta_trace.append(rcfg_run.beta)
    finally:
        if pool:
            pool.shutdown()
    return state, model


def infer(
    state: SearchState,
    model: PolicyModel,
    feats: NodeFeatureMatrix,
    prior_init: PriorMatrix | None,
    tau: float,
) -> AdjacencyMatrix:
    """Threshold the learned probabilities at tau, then break any cycles using
    the probabilities as edge weights. The result is always a DAG."""
    p = forward(model, feats, prior_init)
    a_thr = threshold(p, tau)
    g = WeightedDigraph.from_array(p.probs * a_thr.entries, a_thr.node_names)
    return remove_cycles(g, state.rng)


def save_checkpoint(
    path: str | Path,
    model: PolicyModel,
    cfg: TrainConfig,
    rcfg: RewardConfig,
    seed: int | None = None,
) -> None:
    payload = {
        "magic": CHECKPOINT_MAGIC,
        "d": model.d,
        "feat_width": model.feat_width,
        "embed_dim": model.embed_dim,
        "seed": cfg.seed if seed is None else seed,
        "train_config": asdict(cfg),
        "reward_config": asdict(rcfg),
        "params": {k: model.params[k].tolist() for k in PARAM_ORDER},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[PolicyModel, dict]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("magic") != CHECKPOINT_MAGIC:
        raise InputError(f"{path} is not a recognized checkpoint (magic mismatch)")
    params = {k: np.asarray(v, dtype=np.float64) for k, v in payload["params"].items()}
    model = PolicyModel(
        d=int(payload["d"]),
        feat_width=int(payload["feat_width"]),
        embed_dim=int(payload["embed_dim"]),
        params=params,
    )
    expected = _param_shapes(model.d, model.feat_width, model.embed_dim)
    for k, shape in expected.items():
        if k not in params or params[k].shape != shape:
            raise InputError(f"checkpoint parameter {k} has wrong shape")
    return model, payload
