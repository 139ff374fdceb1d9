"""Randomized CLI sweep checking that every discovered graph is acyclic.

Each iteration generates a benchmark of random size, runs the discover
subcommand with a small training budget, and verifies a_final.csv is a DAG.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

import numpy as np

from guide.cli import main as cli
from guide.graph import is_dag, read_adjacency_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--min-nodes", type=int, default=3)
    ap.add_argument("--max-nodes", type=int, default=15)
    ap.add_argument("--sweep-seed", type=int, default=123)
    args = ap.parse_args()

    rng = np.random.default_rng(args.sweep_seed)
    failures = 0
    with tempfile.TemporaryDirectory() as td:
        td = Path(td)
        cfg_path = td / "cfg.json"
        cfg_path.write_text(json.dumps({"num_epochs": 1, "max_steps": 3, "batch_size": 8}))
        for k in range(args.runs):
            d = int(rng.integers(args.min_nodes, args.max_nodes + 1))
            cap = d * (d - 1) // 2
            edges = int(rng.integers(1, max(2, min(2 * d, cap))))
            bench = td / f"bench{k}"
            out = td / f"run{k}"
            assert cli(["generate", "--out-dir", str(bench), "--nodes", str(d),
                        "--edges", str(edges), "--samples", "60", "--seed", str(k)]) == 0
            assert cli(["discover", "--data", str(bench / "data.csv"),
                        "--prior", str(bench / "prior.csv"), "--config", str(cfg_path),
                        "--seed", str(k), "--out-dir", str(out)]) == 0
            a = read_adjacency_csv(out / "a_final.csv")
            ok = is_dag(a) and a.d == d
            failures += int(not ok)
            print(f"run {k:2d}: d={d:2d} edges={a.edge_count():3d} {'DAG' if ok else 'CYCLIC'}")

    print(f"\n{args.runs - failures}/{args.runs} runs acyclic")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
