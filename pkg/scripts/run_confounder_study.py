"""Hidden-confounder failure mode: U -> X0, U -> X1 with no edge X0 -> X1.

The latent U induces correlation the score cannot explain away, so the search
places a spurious edge between the observed pair. This script measures how
often that happens across seeds; a high rate is the expected (documented)
behavior, not a defect being fixed.
"""

import argparse

from guide.features import compute_features, standardize
from guide.policy import TrainConfig, infer, train
from guide.scoring import PriorMatrix, RewardConfig
from guide.synth import random_sem, simulate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--samples", type=int, default=500)
    ap.add_argument("--strength", type=float, default=1.0)
    args = ap.parse_args()

    spurious = 0
    for s in range(args.runs):
        spec = random_sem(
            d=2, expected_edges=0, m=args.samples, seed=s,
            n_confounders=1, confounder_strength=args.strength,
        )
        data, truth, _ = simulate(spec, prior_fraction=0.0)
        assert int(truth.entries.sum()) == 0
        cfg = TrainConfig(num_epochs=3, max_steps=30, batch_size=32, seed=s)
        state, model = train(
            data, PriorMatrix.unspecified(2, data.column_names), None, cfg, RewardConfig(beta=0.0)
        )
        feats = compute_features(standardize(data))
        a_final = infer(state, model, feats, None, cfg.tau)
        found = a_final.entries[0, 1] == 1 or a_final.entries[1, 0] == 1
        spurious += int(found)
        print(f"seed {s:2d}: spurious edge {'yes' if found else 'no'}")

    print(f"\nspurious X0-X1 edge in {spurious}/{args.runs} runs")


if __name__ == "__main__":
    main()
