"""Language-model elicitation of a prior graph over named variables.

Two modes: a single whole-graph prompt whose numbered edge list is parsed into
a {0,1} matrix, and a pairwise baseline that asks one YES/NO question per
ordered pair and then breaks any cycles in the assembled answer. Every request
is cached on disk keyed by (model, prompt, temperature), so a populated cache
directory makes elicitation fully offline and reproducible.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import requests

from .graph import WeightedDigraph, remove_cycles
from .scoring import PriorMatrix
from .util import InputError, derive_rng
import numpy as np


class ElicitationError(RuntimeError):
    def __init__(self, message: str, pair: tuple[str, str] | None = None):
        super().__init__(message)
        self.pair = pair


@dataclass(frozen=True)
class NodeDescriptor:
    name: str
    description: str = ""


@dataclass
class ElicitationConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4"
    api_key_env: str = "GUIDE_API_KEY"
    temperature: float = 0.0
    max_retries: int = 3
    backoff_base: float = 0.5
    timeout: float = 30.0
    cache_dir: str | Path = ".guide_cache"
    concurrency: int = 4
    seed: int = 0
    offline: bool = False


@dataclass(frozen=True)
class ParseStats:
    n_edges: int
    n_ignored: int
    parse_failed: bool


_EDGE_LINE = re.compile(r"^\s*\d+[.)]\s*\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)")


def build_prompt(descriptors) -> str:
    """Whole-graph elicitation prompt: rules, numbered variables, two-step
    scaffold, and the exact edge output format the parser expects."""
    lines = [
        "You are an intelligent causal discovery agent. Your task is to identify",
        "the direct causal relationships among the variables described below,",
        "using only the variable descriptions and your domain knowledge.",
        "",
        "Important Rules:",
        "1. A variable may causally influence any number of other variables and",
        "   may itself be influenced by several variables at once.",
        "2. Influence can flow through intermediate variables; report only the",
        "   direct causal links.",
        "3. The final graph must contain no cycles and no self-loops.",
        "4. If you are unsure about a relationship, leave it out.",
        "",
        "Variables:",
    ]
    for k, desc in enumerate(descriptors, start=1):
        text = f"{k}. {desc.name}"
        if desc.description:
            text += f": {desc.description}"
        lines.append(text)
    lines += [
        "",
        "Step 1: For each variable, briefly consider which other variables could",
        "plausibly be its direct causes or direct effects.",
        "",
        "Step 2: Compile the final list of directed causal edges, one per line,",
        "numbered, in exactly this format:",
        "1. (A, B) : Explanation of why A causes B",
    ]
    return "\n".join(lines)


def build_pair_prompt(cause: NodeDescriptor, effect: NodeDescriptor) -> str:
    """Binary judgement prompt; the final line of the answer must be YES or NO."""
    cause_line = cause.name + (f": {cause.description}" if cause.description else "")
    effect_line = effect.name + (f": {effect.description}" if effect.description else "")
    return "\n".join(
        [
            "You are an intelligent causal discovery agent. Consider the two",
            "variables below and decide whether the first one directly causes",
            "the second one.",
            "",
            f"First variable: {cause_line}",
            f"Second variable: {effect_line}",
            "",
            "Reason briefly if needed, then answer on the final line with",
            f"exactly YES or NO: does {cause.name} directly cause {effect.name}?",
        ]
    )


def parse_edges(response: str, names) -> tuple[PriorMatrix, ParseStats]:
    """Extract numbered '(X, Y)' lines into a {0,1} matrix.

    Self-loops, unknown names and repeats of an already-seen undirected pair
    are ignored (counted); the first-listed direction of a pair wins. A
    response yielding zero edges returns an empty matrix with the failure flag.
    """
    names = [str(n) for n in names]
    index = {n: i for i, n in enumerate(names)}
    if len(index) != len(names):
        raise InputError("node names must be unique")
    d = len(names)
    entries = np.zeros((d, d), dtype=np.int8)
    n_edges = 0
    n_ignored = 0
    seen_pairs: set[frozenset[int]] = set()
    for line in response.splitlines():
        match = _EDGE_LINE.match(line)
        if not match:
            continue
        src_name, dst_name = match.group(1).strip(), match.group(2).strip()
        if src_name not in index or dst_name not in index:
            n_ignored += 1
            continue
        i, j = index[src_name], index[dst_name]
        if i == j:
            n_ignored += 1
            continue
        key = frozenset((i, j))
        if key in seen_pairs:
            n_ignored += 1
            continue
        seen_pairs.add(key)
        entries[i, j] = 1
        n_edges += 1
    prior = PriorMatrix(entries=entries, node_names=tuple(names))
    return prior, ParseStats(n_edges=n_edges, n_ignored=n_ignored, parse_failed=n_edges == 0)


def parse_binary_judgement(response: str) -> bool | None:
    """Read the final nonempty line as YES or NO; None when neither."""
    for line in reversed(response.splitlines()):
        token = line.strip().strip("*_`.!:").upper()
        if not token:
            continue
        if token.startswith("YES"):
            return True
        if token.startswith("NO"):
            return False
        return None
    return None


def _cache_path(cfg: ElicitationConfig, prompt: str) -> Path:
    key = hashlib.sha256(
        json.dumps(
            {"model": cfg.model, "prompt": prompt, "temperature": cfg.temperature},
            sort_keys=True,
        ).encode("utf-8")
    ).hexdigest()
    return Path(cfg.cache_dir) / f"{key}.json"


def complete(prompt: str, cfg: ElicitationConfig) -> str:
    """One chat completion, cache-first. Retries transient transport and
    rate-limit failures with exponential backoff before giving up."""
    path = _cache_path(cfg, prompt)
    if path.exists():
        return json.loads(path.read_text(encoding="utf-8"))["content"]
    if cfg.offline:
        raise ElicitationError(f"cache miss in offline mode (cache dir {cfg.cache_dir})")

    body = {
        "model": cfg.model,
        "temperature": cfg.temperature,
        "messages": [{"role": "user", "content": prompt}],
    }
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(cfg.api_key_env) or os.environ.get("OPENAI_API_KEY")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    last_error = "no attempt made"
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            time.sleep(cfg.backoff_base * 2 ** (attempt - 1))
        try:
            resp = requests.post(cfg.endpoint, json=body, headers=headers, timeout=cfg.timeout)
        except requests.RequestException as exc:
            last_error = f"transport failure: {exc}"
            continue
        if resp.status_code == 200:
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise ElicitationError(f"malformed completion payload: {exc}") from exc
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(
                json.dumps({"model": cfg.model, "prompt": prompt, "content": content}, sort_keys=True),
                encoding="utf-8",
            )
            os.replace(tmp, path)
            return content
        if resp.status_code == 429 or resp.status_code >= 500:
            last_error = f"HTTP {resp.status_code}"
            continue
        raise ElicitationError(f"HTTP {resp.status_code} from {cfg.endpoint}: {resp.text[:200]}")
    raise ElicitationError(f"giving up after {cfg.max_retries + 1} attempts ({last_error})")


def elicit_graph(descriptors, cfg: ElicitationConfig, mode: str = "whole-graph") -> PriorMatrix:
    """Ask the model for a prior graph over the described variables.

    whole-graph sends one prompt and parses the edge list. pairwise sends one
    YES/NO prompt per ordered pair (d*(d-1) requests, up to cfg.concurrency in
    flight) and breaks cycles in the assembled matrix before returning it.
    """
    descriptors = list(descriptors)
    names = [desc.name for desc in descriptors]
    if len(set(names)) != len(names):
        raise InputError("descriptor names must be unique")
    d = len(names)
    if d < 2:
        raise InputError("need at least 2 descriptors")

    if mode == "whole-graph":
        prior, _ = parse_edges(complete(build_prompt(descriptors), cfg), names)
        return prior

    if mode != "pairwise":
        raise InputError(f"mode must be 'whole-graph' or 'pairwise', got {mode!r}")

    pairs = [(i, j) for i in range(d) for j in range(d) if i != j]

    def ask(pair: tuple[int, int]) -> int:
        i, j = pair
        try:
            answer = parse_binary_judgement(complete(build_pair_prompt(descriptors[i], descriptors[j]), cfg))
        except ElicitationError as exc:
            raise ElicitationError(str(exc), pair=(names[i], names[j])) from exc
        return 1 if answer else 0

    entries = np.zeros((d, d), dtype=np.int8)
    if cfg.concurrency > 1:
        with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
            answers = list(pool.map(ask, pairs))
    else:
        answers = [ask(pair) for pair in pairs]
    for (i, j), bit in zip(pairs, answers):
        entries[i, j] = bit
    dag = remove_cycles(
        WeightedDigraph.from_array(entries.astype(np.float64), tuple(names)),
        derive_rng(cfg.seed, "prior-cycles"),
    )
    return PriorMatrix.from_adjacency(dag)


def load_descriptors(path: str | Path) -> list[NodeDescriptor]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"descriptor file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, list) or not raw:
        raise InputError(f"descriptor file {path} must hold a nonempty JSON list")
    out = []
    for item in raw:
        if not isinstance(item, dict) or "name" not in item:
            raise InputError(f"descriptor entries need a 'name' field: {item!r}")
        out.append(NodeDescriptor(name=str(item["name"]), description=str(item.get("description", ""))))
    return out
