"""Shared plumbing: seeded RNG streams, hashing, input errors."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


class InputError(ValueError):
    """Bad user-supplied file or parameter. The CLI maps this to exit code 2."""


def derive_rng(seed: int, *labels) -> np.random.Generator:
    """Derive an independent RNG stream from the run seed and a label path.

    Every source of randomness in a run pulls from a stream derived this way,
    so results are reproducible regardless of evaluation order or threading.
    """
    if seed < 0:
        raise InputError(f"seed must be nonnegative, got {seed}")
    tag = "|".join(str(x) for x in labels)
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    ss = np.random.SeedSequence([int(seed)] + words)
    return np.random.Generator(np.random.PCG64(ss))


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays so json.dumps round-trips them."""
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def dump_json(obj, path: str | Path) -> None:
    text = json.dumps(to_jsonable(obj), sort_keys=True, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")
