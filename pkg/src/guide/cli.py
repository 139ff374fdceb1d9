"""Command line front end.

Subcommands: generate (synthetic SEM benchmark), discover (train the policy
and write the final graph plus a run manifest), prune (regression-weight
pruning of an existing graph), evaluate (metrics against a ground truth),
prior (language-model elicitation), report (aggregate metric JSONs to CSV).

Exit codes: 0 on success, 1 on runtime failure, 2 on bad usage or unreadable
input. Numeric settings come from an optional JSON config file whose flat keys
mirror the dataclass fields; explicit command line flags win over the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .features import Dataset, load_dataset
from .graph import AdjacencyMatrix, read_adjacency_csv, write_adjacency_csv, _read_matrix_csv
from .metrics import report, report_to_dict
from .policy import TrainConfig, infer, save_checkpoint, train
from .features import compute_features, standardize
from .pruning import prune, regression_weights, write_weight_csv
from .prior_llm import ElicitationConfig, ElicitationError, elicit_graph, load_descriptors
from .scoring import PriorMatrix, RewardConfig, read_prior_csv, write_prior_csv
from .synth import random_sem, write_sem_files
from .util import InputError, derive_rng, dump_json, sha256_file, to_jsonable

# Accepted config-file keys. Values are (dataclass, field) targets; a few
# historical aliases map onto the same field.
_CONFIG_KEYS = {
    "num_epochs": ("train", "num_epochs"),
    "batch_size": ("train", "batch_size"),
    "learning_rate": ("train", "learning_rate"),
    "actor_lr": ("train", "learning_rate"),
    "gamma": ("train", "gamma"),
    "max_steps": ("train", "max_steps"),
    "grad_clip_norm": ("train", "grad_clip_norm"),
    "clip_grad_norm": ("train", "grad_clip_norm"),
    "tau": ("train", "tau"),
    "seed": ("train", "seed"),
    "threads": ("train", "threads"),
    "lambda1": ("reward", "lambda1"),
    "lambda2": ("reward", "lambda2"),
    "beta": ("reward", "beta"),
    "tau_calibration": ("reward", "tau_calibration"),
    "calibration_enabled": ("reward", "calibration_enabled"),
    "calibration_window": ("reward", "calibration_window"),
    "score_variant": ("reward", "score_variant"),
}


def _load_config_file(path: Path) -> dict:
    if not path.exists():
        raise InputError(f"file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InputError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(raw) - set(_CONFIG_KEYS))
    if unknown:
        raise InputError(f"unknown config keys in {path}: {', '.join(unknown)}")
    return raw


def build_configs(config_path, overrides: dict) -> tuple[TrainConfig, RewardConfig]:
    """Defaults, then config-file values, then explicit CLI overrides."""
    train_kw: dict = {}
    reward_kw: dict = {}
    if config_path is not None:
        for key, value in _load_config_file(Path(config_path)).items():
            target, field = _CONFIG_KEYS[key]
            (train_kw if target == "train" else reward_kw)[field] = value
    for key, value in overrides.items():
        if value is None:
            continue
        target, field = _CONFIG_KEYS[key]
        (train_kw if target == "train" else reward_kw)[field] = value
    cfg = TrainConfig(**train_kw)
    rcfg = RewardConfig(**reward_kw)
    cfg.validate()
    rcfg.validate()
    return cfg, rcfg


def _load_matrix_for(data: Dataset, path: Path, kind: str):
    """Read a prior or adjacency CSV and reconcile its node names with the
    dataset columns. Headerless files inherit the dataset's names."""
    allowed = {-1, 0, 1} if kind == "prior" else {0, 1}
    mat, names = _read_matrix_csv(Path(path), allowed)
    if mat.shape[0] != data.d:
        raise InputError(
            f"{kind} file {path} is {mat.shape[0]}x{mat.shape[1]} but the data has {data.d} columns"
        )
    if names is not None and tuple(names) != data.column_names:
        raise InputError(
            f"{kind} file {path} names {list(names)} do not match data columns {list(data.column_names)}"
        )
    if kind == "prior":
        return PriorMatrix(entries=mat.astype(np.int8), node_names=data.column_names)
    return AdjacencyMatrix.from_array(mat.astype(np.int8), data.column_names)


def _input_record(path) -> dict:
    return {"path": str(path), "sha256": sha256_file(Path(path))}


def cmd_generate(args) -> int:
    spec = random_sem(
        d=args.nodes,
        expected_edges=args.edges,
        m=args.samples,
        seed=args.seed,
        noise_scale=args.noise,
        n_confounders=args.confounders,
        confounder_strength=args.confounder_strength,
    )
    paths = write_sem_files(spec, Path(args.out_dir), prior_fraction=args.prior_fraction)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def cmd_discover(args) -> int:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    overrides = {"seed": args.seed, "tau": args.tau, "threads": args.threads}
    cfg, rcfg = build_configs(args.config, overrides)

    data = load_dataset(Path(args.data))
    inputs = {"data": _input_record(args.data)}
    if args.no_prior and args.prior is not None:
        raise InputError("--prior and --no-prior are mutually exclusive")
    if args.prior is not None:
        prior = _load_matrix_for(data, Path(args.prior), "prior")
        inputs["prior"] = _input_record(args.prior)
    else:
        prior = PriorMatrix.unspecified(data.d, data.column_names)
    prior_init = None
    if args.prior_init is not None:
        prior_init = PriorMatrix.from_adjacency(_load_matrix_for(data, Path(args.prior_init), "adjacency"))
        inputs["prior_init"] = _input_record(args.prior_init)
    if args.config is not None:
        inputs["config"] = _input_record(args.config)

    merged = prior.merge(prior_init)
    state, model = train(data, merged, prior_init, cfg, rcfg)
    feats = compute_features(standardize(data))
    a_final = infer(state, model, feats, prior_init, cfg.tau)

    final_path = out_dir / "a_final.csv"
    ckpt_path = out_dir / "checkpoint.json"
    write_adjacency_csv(a_final, final_path)
    save_checkpoint(ckpt_path, model, cfg, rcfg, seed=cfg.seed)

    manifest = {
        "command": "discover",
        "version": __version__,
        "seed": cfg.seed,
        "config": {"train": asdict(cfg), "reward": asdict(rcfg)},
        "inputs": inputs,
        "outputs": {"a_final": final_path.name, "checkpoint": ckpt_path.name},
        "best_total": state.best_total,
        "best_total_trace": list(state.trace),
        "beta_trace": list(state.beta_trace),
        "aborted_steps": state.aborted_steps,
        "lr_halved": state.lr_halved,
        "edge_count": a_final.edge_count(),
        "wall_clock_seconds": time.perf_counter() - started,
    }
    dump_json(to_jsonable(manifest), out_dir / "run-manifest.json")
    print(f"a_final: {final_path}")
    print(f"edges: {a_final.edge_count()}  best_total: {state.best_total:.6f}")
    return 0


def cmd_prune(args) -> int:
    data = load_dataset(Path(args.data))
    graph = _load_matrix_for(data, Path(args.graph), "adjacency")
    w = regression_weights(data, graph)
    pruned = prune(w, derive_rng(args.seed, "prune"))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_adjacency_csv(pruned, out)
    if args.weights_out is not None:
        write_weight_csv(w, Path(args.weights_out))
    print(f"pruned: {out}  edges: {pruned.edge_count()}")
    return 0


def cmd_evaluate(args) -> int:
    pred = read_adjacency_csv(Path(args.pred))
    truth = read_adjacency_csv(Path(args.truth))
    cohort = None
    if args.cohort:
        cohort = [float(tok) for tok in args.cohort.split(",") if tok.strip()]
    rep = report(pred, truth, cohort=cohort)
    payload = report_to_dict(rep, d=truth.d, seed=args.seed)
    if args.out is not None:
        dump_json(payload, Path(args.out))
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_prior(args) -> int:
    descriptors = load_descriptors(Path(args.descriptors))
    cfg = ElicitationConfig(
        endpoint=args.endpoint,
        model=args.model,
        temperature=args.temperature,
        max_retries=args.max_retries,
        timeout=args.timeout,
        cache_dir=args.cache_dir,
        concurrency=args.concurrency,
        seed=args.seed,
        offline=args.offline,
    )
    prior = elicit_graph(descriptors, cfg, mode=args.mode)
    write_prior_csv(prior, Path(args.out))
    print(f"prior: {args.out}  asserted edges: {int((prior.entries == 1).sum())}")
    return 0


_REPORT_COLUMNS = ("source", "d", "seed", "tpr", "fdr", "fpr", "shd", "tp_nnz", "rp", "nnz")


def cmd_report(args) -> int:
    rows = []
    for path in args.inputs:
        path = Path(path)
        if not path.exists():
            raise InputError(f"file not found: {path}")
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"report file {path} is not valid JSON: {exc}") from exc
        row = {"source": path.name}
        for key in _REPORT_COLUMNS[1:]:
            value = payload.get(key)
            row[key] = "" if value is None else value
        rows.append(row)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_REPORT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    print(f"report: {out}  rows: {len(rows)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="guide", description="Prior-guided causal structure discovery.")
    parser.add_argument("--version", action="version", version=f"guide {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic SEM benchmark (data, truth, prior, spec)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--edges", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--confounders", type=int, default=0)
    p.add_argument("--confounder-strength", type=float, default=1.0)
    p.add_argument("--prior-fraction", type=float, default=0.25)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("discover", help="learn a graph from data and write a_final.csv plus a manifest")
    p.add_argument("--data", required=True)
    p.add_argument("--prior", default=None, help="prior CSV with entries in {-1,0,1}")
    p.add_argument("--no-prior", action="store_true", help="data-only run; the prior term is identically zero")
    p.add_argument("--prior-init", default=None, help="{0,1} adjacency fed to the prior encoder")
    p.add_argument("--config", default=None, help="JSON file of training and reward settings")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("prune", help="drop weak edges from a graph by regression weight")
    p.add_argument("--data", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--weights-out", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("evaluate", help="score a predicted graph against a ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", default=None, help="write the metric JSON here as well")
    p.add_argument("--cohort", default=None, help="comma-separated TP/NNZ scores of other models")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("prior", help="elicit a prior graph from a language model")
    prior_sub = p.add_subparsers(dest="prior_command", required=True)
    pf = prior_sub.add_parser("fetch", help="query the model (or its on-disk cache) and write a prior CSV")
    pf.add_argument("--descriptors", required=True, help="JSON list of {name, description}")
    pf.add_argument("--out", required=True)
    pf.add_argument("--mode", choices=("whole-graph", "pairwise"), default="whole-graph")
    pf.add_argument("--endpoint", default=ElicitationConfig.endpoint)
    pf.add_argument("--model", default=ElicitationConfig.model)
    pf.add_argument("--temperature", type=float, default=ElicitationConfig.temperature)
    pf.add_argument("--max-retries", type=int, default=ElicitationConfig.max_retries)
    pf.add_argument("--timeout", type=float, default=ElicitationConfig.timeout)
    pf.add_argument("--cache-dir", default=ElicitationConfig.cache_dir)
    pf.add_argument("--concurrency", type=int, default=ElicitationConfig.concurrency)
    pf.add_argument("--seed", type=int, default=ElicitationConfig.seed)
    pf.add_argument("--offline", action="store_true", help="fail on cache miss instead of calling out")
    pf.set_defaults(func=cmd_prior)

    p = sub.add_parser("report", help="aggregate metric JSON files into one CSV table")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ElicitationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
