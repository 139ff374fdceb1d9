"""Paired ablation: prior-guided search vs data-only search.

Per seed, the same low-signal SEM (few samples, high noise) is solved twice:
once with a fully specified truthful prior (penalty beta plus the graph fed to
the prior encoder) and once with no prior information and beta = 0. Reports
per-seed TPR, the mean difference, and a paired sign test.
"""

import argparse
import math

import numpy as np

from guide.features import compute_features, standardize
from guide.graph import AdjacencyMatrix
from guide.metrics import report
from guide.policy import TrainConfig, infer, train
from guide.scoring import PriorMatrix, RewardConfig
from guide.synth import random_sem, simulate


def run_arm(seed: int, use_prior: bool, args) -> float:
    spec = random_sem(
        d=args.nodes, expected_edges=args.edges, m=args.samples,
        seed=seed, noise_scale=args.noise,
    )
    data, truth, prior = simulate(spec, prior_fraction=args.prior_fraction)
    cfg = TrainConfig(seed=seed)
    if use_prior:
        rcfg = RewardConfig(beta=args.beta)
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
    a_final = infer(state, model, feats, init, cfg.tau)
    return report(a_final, truth).tpr


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--nodes", type=int, default=10)
    ap.add_argument("--edges", type=float, default=15.0)
    ap.add_argument("--samples", type=int, default=50)
    ap.add_argument("--noise", type=float, default=2.0)
    ap.add_argument("--beta", type=float, default=5.0)
    ap.add_argument("--prior-fraction", type=float, default=1.0)
    args = ap.parse_args()

    diffs = []
    for s in range(args.seeds):
        with_prior = run_arm(s, True, args)
        without = run_arm(s, False, args)
        diffs.append(with_prior - without)
        print(f"seed {s:2d}: tpr {with_prior:.3f} with prior, {without:.3f} without ({diffs[-1]:+.3f})")

    wins = sum(1 for x in diffs if x > 0)
    losses = sum(1 for x in diffs if x < 0)
    n = wins + losses
    p_value = sum(math.comb(n, k) for k in range(wins, n + 1)) / 2**n if n else 1.0
    print(f"\nmean dTPR {np.mean(diffs):+.4f}  wins {wins}  losses {losses}  ties {args.seeds - n}")
    print(f"paired sign test p = {p_value:.5f}")


if __name__ == "__main__":
    main()
