"""Acceptance gate: one test per release criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines.
Every check here re-derives its expectation from an independent oracle or a
pinned seeded configuration; none of them trust the library's own numbers.
"""

import itertools
import json
import math
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg

from guide.cli import main
from guide.features import compute_features, load_dataset, make_dataset, standardize
from guide.graph import (
    AdjacencyMatrix,
    WeightedDigraph,
    acyclicity_h,
    read_adjacency_csv,
    remove_cycles,
)
from guide.metrics import report
from guide.policy import (
    PARAM_ORDER,
    TrainConfig,
    forward,
    infer,
    init_policy,
    surrogate_gradients,
    surrogate_loss,
    train,
)
from guide.prior_llm import (
    ElicitationConfig,
    NodeDescriptor,
    elicit_graph,
    parse_edges,
)
from guide.pruning import prune, regression_weights
from guide.scoring import BicScorer, PriorMatrix, RewardConfig, read_prior_csv
from guide.synth import chain_sem, random_sem, simulate
from guide.util import derive_rng

pytestmark = pytest.mark.acceptance

FIXTURES = Path(__file__).parent / "fixtures"

ACY_TOL = 1e-9


def verdict(name: str, ok: bool, detail: str = "") -> None:
    line = f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


# independent DAG oracle: Kahn's algorithm on the raw matrix
def kahn_is_dag(entries: np.ndarray) -> bool:
    adj = entries.copy()
    indeg = adj.sum(axis=0)
    queue = [i for i in range(len(adj)) if indeg[i] == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for j in np.flatnonzero(adj[node]):
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    return seen == len(adj)


def test_acyclicity_oracle():
    started = time.perf_counter()
    mismatches = 0
    # exhaustive: every off-diagonal 0/1 pattern at d=3
    slots = [(i, j) for i in range(3) for j in range(3) if i != j]
    for bits in itertools.product((0, 1), repeat=6):
        entries = np.zeros((3, 3), dtype=np.int8)
        for (i, j), bit in zip(slots, bits):
            entries[i, j] = bit
        h = acyclicity_h(AdjacencyMatrix.from_array(entries))
        expm_h = float(np.trace(scipy.linalg.expm(entries.astype(np.float64)))) - 3
        if (h <= ACY_TOL) != kahn_is_dag(entries) or abs(h - expm_h) > ACY_TOL:
            mismatches += 1
    # randomized: 500 graphs at d in [4, 8]
    rng = derive_rng(2024, "acyclicity-oracle")
    for _ in range(500):
        d = int(rng.integers(4, 9))
        entries = (rng.random((d, d)) < rng.uniform(0.1, 0.5)).astype(np.int8)
        np.fill_diagonal(entries, 0)
        h = acyclicity_h(AdjacencyMatrix.from_array(entries))
        expm_h = float(np.trace(scipy.linalg.expm(entries.astype(np.float64)))) - d
        if (h <= ACY_TOL) != kahn_is_dag(entries) or abs(h - expm_h) > ACY_TOL:
            mismatches += 1
    elapsed = time.perf_counter() - started
    verdict(
        "acyclicity-oracle",
        mismatches == 0 and elapsed < 5.0,
        f"564 graphs, {mismatches} mismatches, {elapsed:.2f}s",
    )


def oracle_bic(values: np.ndarray, entries: np.ndarray, variant: str) -> float:
    """OLS via explicit per-node design matrices, no shared Gram machinery."""
    m, d = values.shape
    rss = np.zeros(d)
    for i in range(d):
        parents = np.flatnonzero(entries[:, i])
        design = np.hstack([values[:, parents], np.ones((m, 1))])
        coef, _, _, _ = np.linalg.lstsq(design, values[:, i], rcond=None)
        resid = values[:, i] - design @ coef
        rss[i] = float(resid @ resid)
    k = int(entries.sum())
    if variant == "equal":
        return m * d * math.log(max(rss.sum() / (m * d), 1e-12)) + k * math.log(m)
    return float(sum(m * math.log(max(r / m, 1e-12)) for r in rss)) + k * math.log(m)


def test_bic_oracle_equivalence():
    started = time.perf_counter()
    rng = derive_rng(77, "bic-oracle")
    worst = 0.0
    for trial in range(100):
        d = int(rng.integers(2, 9))
        m = int(rng.integers(20, 501))
        values = rng.normal(size=(m, d))
        entries = (rng.random((d, d)) < 0.3).astype(np.int8)
        np.fill_diagonal(entries, 0)
        entries = np.triu(entries)  # acyclic by construction
        variant = "equal" if trial % 2 == 0 else "different"
        scorer = BicScorer(make_dataset(values), variant)
        got, _ = scorer.bic(AdjacencyMatrix.from_array(entries))
        want = oracle_bic(values, entries, variant)
        worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    elapsed = time.perf_counter() - started
    verdict(
        "bic-oracle",
        worst <= 1e-8 and elapsed < 30.0,
        f"100 pairs, worst rel err {worst:.2e}, {elapsed:.2f}s",
    )


def test_gradient_check():
    started = time.perf_counter()
    d = 4
    rng = derive_rng(31, "grad-accept")
    feats = compute_features(standardize(make_dataset(rng.normal(size=(80, d)))))
    model = init_policy(d, feats.width, derive_rng(5, "init"))
    prior01 = (rng.random((d, d)) < 0.3).astype(np.int8)
    np.fill_diagonal(prior01, 0)
    probs = forward(model, feats, None).probs
    graphs = (rng.random((6, d, d)) < probs).astype(np.int8)
    for g in graphs:
        np.fill_diagonal(g, 0)
    coeffs = rng.normal(size=6)
    grads = surrogate_gradients(model, feats, prior01, graphs, coeffs, dropout_seed=11)
    h = 1e-5
    worst = 0.0
    pick = derive_rng(32, "grad-pick")
    for name in PARAM_ORDER:
        flat = model.params[name].ravel()
        for idx in pick.choice(flat.size, size=min(flat.size, 16), replace=False):
            orig = flat[idx]
            flat[idx] = orig + h
            up = surrogate_loss(model, feats, prior01, graphs, coeffs, dropout_seed=11)
            flat[idx] = orig - h
            dn = surrogate_loss(model, feats, prior01, graphs, coeffs, dropout_seed=11)
            flat[idx] = orig
            fd = (up - dn) / (2 * h)
            an = grads[name].ravel()[idx]
            worst = max(worst, abs(fd - an) / max(1.0, abs(fd), abs(an)))
    elapsed = time.perf_counter() - started
    verdict(
        "gradient-check",
        worst <= 1e-4 and elapsed < 60.0,
        f"{len(PARAM_ORDER)} tensors, worst rel err {worst:.2e}, {elapsed:.2f}s",
    )


def test_dag_guarantee(tmp_path):
    started = time.perf_counter()
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"num_epochs": 1, "max_steps": 3, "batch_size": 8}))
    rng = np.random.default_rng(123)
    cyclic_outputs = 0
    for k in range(50):
        d = int(rng.integers(3, 16))
        cap = d * (d - 1) // 2
        edges = int(rng.integers(1, max(2, min(2 * d, cap))))
        bench = tmp_path / f"b{k}"
        assert main(
            ["generate", "--out-dir", str(bench), "--nodes", str(d), "--edges", str(edges),
             "--samples", "60", "--seed", str(k)]
        ) == 0
        out = tmp_path / f"r{k}"
        assert main(
            ["discover", "--data", str(bench / "data.csv"), "--prior", str(bench / "prior.csv"),
             "--config", str(cfg_path), "--seed", str(k), "--out-dir", str(out)]
        ) == 0
        a = read_adjacency_csv(out / "a_final.csv")
        if not kahn_is_dag(a.entries):
            cyclic_outputs += 1
    # property side: cycle repair always lands on a DAG that is a sub-digraph
    repair_failures = 0
    prop_rng = derive_rng(55, "repair-prop")
    for _ in range(1000):
        d = int(prop_rng.integers(2, 9))
        w = prop_rng.random((d, d)) * (prop_rng.random((d, d)) < 0.4)
        np.fill_diagonal(w, 0.0)
        g = WeightedDigraph.from_array(w)
        dag = remove_cycles(g, prop_rng)
        subset = (dag.entries <= (w > 0)).all()
        if not kahn_is_dag(dag.entries) or not subset:
            repair_failures += 1
    elapsed = time.perf_counter() - started
    verdict(
        "dag-guarantee",
        cyclic_outputs == 0 and repair_failures == 0 and elapsed < 120.0,
        f"50 runs, {cyclic_outputs} cyclic; 1000 repairs, {repair_failures} bad, {elapsed:.1f}s",
    )


def full_pipeline(data, prior, prior_init, cfg, rcfg):
    state, model = train(data, prior, prior_init, cfg, rcfg)
    feats = compute_features(standardize(data))
    a = infer(state, model, feats, prior_init, cfg.tau)
    w = regression_weights(data, a)
    return prune(w, derive_rng(cfg.seed, "prune")), state


def test_end_to_end_recovery():
    started = time.perf_counter()
    spec = chain_sem(3, 1000, seed=11)
    data, truth, prior = simulate(spec, prior_fraction=1.0)
    final, _ = full_pipeline(data, prior, None, TrainConfig(seed=0), RewardConfig())
    chain_rep = report(final, truth)

    spec = random_sem(d=10, expected_edges=15, m=2000, seed=5)
    data, truth, prior = simulate(spec, prior_fraction=0.25)
    final, _ = full_pipeline(data, prior, None, TrainConfig(seed=0), RewardConfig())
    sem_rep = report(final, truth)
    empty_shd = int(truth.entries.sum())

    elapsed = time.perf_counter() - started
    ok = (
        chain_rep.shd <= 1
        and sem_rep.tp_nnz >= 0.5
        and sem_rep.shd < empty_shd
        and elapsed < 300.0
    )
    verdict(
        "end-to-end-recovery",
        ok,
        f"chain shd={chain_rep.shd}, 10-node tp_nnz={sem_rep.tp_nnz:.2f} "
        f"shd={sem_rep.shd} (empty {empty_shd}), {elapsed:.0f}s",
    )


def test_ablation_prior_direction():
    """Low-signal regime (m=50, noise 2.0) where the data alone underdetermines
    the graph; a fully specified truthful prior must raise TPR."""
    started = time.perf_counter()

    def run(seed: int, use_prior: bool) -> float:
        spec = random_sem(d=10, expected_edges=15, m=50, seed=seed, noise_scale=2.0)
        data, truth, prior = simulate(spec, prior_fraction=1.0)
        cfg = TrainConfig(seed=seed)
        if use_prior:
            rcfg = RewardConfig(beta=5.0)
            p = prior
            init = PriorMatrix.from_adjacency(
                AdjacencyMatrix.from_array((prior.entries == 1).astype(np.int8), data.column_names)
            )
        else:
            rcfg = RewardConfig(beta=0.0)
            p = PriorMatrix.unspecified(data.d, data.column_names)
            init = None
        state, model = train(data, p, init, cfg, rcfg)
        feats = compute_features(standardize(data))
        a = infer(state, model, feats, init, cfg.tau)
        return report(a, truth).tpr

    diffs = [run(s, True) - run(s, False) for s in range(20)]
    wins = sum(1 for x in diffs if x > 0)
    losses = sum(1 for x in diffs if x < 0)
    n = wins + losses
    p_value = sum(math.comb(n, k) for k in range(wins, n + 1)) / 2**n if n else 1.0
    mean_diff = float(np.mean(diffs))
    elapsed = time.perf_counter() - started
    verdict(
        "ablation-direction",
        mean_diff > 0 and p_value < 0.05 and elapsed < 1200.0,
        f"mean dTPR {mean_diff:+.3f}, {wins}W/{losses}L/{20 - n}T, sign-test p={p_value:.4f}, {elapsed:.0f}s",
    )


def test_calibration_behavior():
    spec = chain_sem(5, 400, seed=3)
    data, truth, _ = simulate(spec, prior_fraction=1.0)
    cfg = TrainConfig(num_epochs=4, max_steps=25, batch_size=32, seed=0)
    rcfg = RewardConfig(calibration_enabled=True, calibration_window=10, beta=0.5)

    truthful = PriorMatrix.from_adjacency(truth)
    reversed_prior = PriorMatrix.from_adjacency(
        AdjacencyMatrix.from_array(truth.entries.T.copy(), truth.node_names)
    )
    state_truth, _ = train(data, truthful, None, cfg, rcfg)
    state_adv, _ = train(data, reversed_prior, None, cfg, rcfg)

    ok = state_adv.beta_trace[0] == 0.0 and all(b == rcfg.beta for b in state_truth.beta_trace)
    verdict(
        "calibration-behavior",
        ok,
        f"adversarial trace {state_adv.beta_trace}, truthful trace {state_truth.beta_trace}",
    )


def oracle_counts(pred: np.ndarray, truth: np.ndarray) -> tuple[int, int, int, int, int, int]:
    d = len(pred)
    tp = fp = tn = fn = rev = 0
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            if pred[i][j] and truth[i][j]:
                tp += 1
            elif pred[i][j] and not truth[i][j]:
                fp += 1
                if truth[j][i]:
                    rev += 1
            elif not pred[i][j] and truth[i][j]:
                fn += 1
            else:
                tn += 1
    # per unordered pair: a pure reversal costs one move, anything else is hamming
    shd = 0
    for i in range(d):
        for j in range(i + 1, d):
            p_pair = (pred[i][j], pred[j][i])
            t_pair = (truth[i][j], truth[j][i])
            if p_pair == t_pair:
                continue
            if p_pair == t_pair[::-1] and sum(p_pair) == 1:
                shd += 1
            else:
                shd += abs(p_pair[0] - t_pair[0]) + abs(p_pair[1] - t_pair[1])
    return tp, fp, tn, fn, rev, shd


def test_metrics_oracle():
    rng = derive_rng(404, "metrics-oracle")
    failures = 0
    for _ in range(200):
        d = 5
        pred = (rng.random((d, d)) < 0.3).astype(np.int8)
        truth = (rng.random((d, d)) < 0.3).astype(np.int8)
        np.fill_diagonal(pred, 0)
        np.fill_diagonal(truth, 0)
        truth = np.triu(truth)
        rep = report(AdjacencyMatrix.from_array(pred), AdjacencyMatrix.from_array(truth))
        tp, fp, tn, fn, rev, shd = oracle_counts(pred.tolist(), truth.tolist())
        nnz = tp + fp
        checks = [
            rep.nnz == nnz,
            rep.shd == shd,
            rep.tpr == (tp / (tp + fn) if tp + fn else 0.0),
            rep.fdr == (fp / nnz if nnz else 0.0),
            rep.fpr == (fp / (fp + tn) if fp + tn else 0.0),
            nnz == 0 or math.isclose(rep.tp_nnz, 1.0 - rep.fdr, rel_tol=1e-12),
        ]
        if not all(checks):
            failures += 1
    verdict("metrics-oracle", failures == 0, f"200 graph pairs, {failures} mismatches")


def test_confounder_sensitivity():
    started = time.perf_counter()
    spurious = 0
    for s in range(20):
        spec = random_sem(
            d=2, expected_edges=0, m=500, seed=s, n_confounders=1, confounder_strength=1.0
        )
        data, truth, _ = simulate(spec, prior_fraction=0.0)
        assert int(truth.entries.sum()) == 0
        cfg = TrainConfig(num_epochs=3, max_steps=30, batch_size=32, seed=s)
        state, model = train(
            data, PriorMatrix.unspecified(2, data.column_names), None, cfg, RewardConfig(beta=0.0)
        )
        feats = compute_features(standardize(data))
        a = infer(state, model, feats, None, cfg.tau)
        if a.entries[0, 1] == 1 or a.entries[1, 0] == 1:
            spurious += 1
    elapsed = time.perf_counter() - started
    verdict(
        "confounder-sensitivity",
        spurious >= 10,
        f"spurious X0-X1 edge in {spurious}/20 hidden-confounder runs, {elapsed:.0f}s",
    )


def test_cli_determinism(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"num_epochs": 2, "max_steps": 10, "batch_size": 16}))
    assert main(
        ["generate", "--out-dir", str(tmp_path / "bench"), "--nodes", "4", "--edges", "3",
         "--samples", "120", "--seed", "2"]
    ) == 0
    for name in ("one", "two"):
        assert main(
            ["discover", "--data", str(tmp_path / "bench" / "data.csv"),
             "--prior", str(tmp_path / "bench" / "prior.csv"),
             "--config", str(cfg_path), "--seed", "4", "--out-dir", str(tmp_path / name)]
        ) == 0
    same_graph = (tmp_path / "one" / "a_final.csv").read_bytes() == (tmp_path / "two" / "a_final.csv").read_bytes()
    manifests = []
    for name in ("one", "two"):
        m = json.loads((tmp_path / name / "run-manifest.json").read_text())
        m.pop("wall_clock_seconds")
        manifests.append(m)
    verdict(
        "cli-determinism",
        same_graph and manifests[0] == manifests[1],
        "byte-identical graph and manifest modulo wall clock",
    )


class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        prompt = json.loads(self.rfile.read(length))["messages"][0]["content"]
        self.server.requests.append(prompt)
        answer = "YES" if "does smoking directly cause tar?" in prompt else "NO"
        payload = json.dumps({"choices": [{"message": {"content": answer}}]}).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


def test_prior_llm_offline(tmp_path):
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        descriptors = [
            NodeDescriptor("smoking"), NodeDescriptor("tar"),
            NodeDescriptor("cancer"), NodeDescriptor("asbestos"),
        ]
        cfg = ElicitationConfig(
            endpoint=f"http://127.0.0.1:{server.server_address[1]}/v1/chat/completions",
            model="stub",
            cache_dir=tmp_path / "cache",
        )
        first = elicit_graph(descriptors, cfg, mode="pairwise")
        cold = len(server.requests)
        second = elicit_graph(descriptors, cfg, mode="pairwise")
        warm = len(server.requests) - cold
    finally:
        server.shutdown()
        thread.join()

    text = (FIXTURES / "whole_graph_response.txt").read_text()
    parsed, _ = parse_edges(text, ["smoking", "tar", "cancer", "asbestos"])
    committed = read_prior_csv(FIXTURES / "whole_graph_prior.csv")
    round_trip = np.array_equal(parsed.entries, committed.entries)

    ok = cold == 12 and warm == 0 and np.array_equal(first.entries, second.entries) and round_trip
    verdict(
        "prior-llm-offline",
        ok,
        f"{cold} requests cold, {warm} warm, fixture round-trip {'ok' if round_trip else 'BAD'}",
    )
