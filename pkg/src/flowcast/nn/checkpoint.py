"""Model checkpoints: spec + flat parameter vector + seed, bit-exact round trip."""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .netspec import NetParams, NetSpec, param_layout

CHECKPOINT_VERSION = 1


def save_checkpoint(path, spec: NetSpec, params: NetParams, seed: int) -> Path:
    """Write a ``.npz`` checkpoint; returns the path actually written."""
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(path.suffix + ".npz")
    np.savez(
        path,
        version=np.int64(CHECKPOINT_VERSION),
        spec_json=np.str_(json.dumps(asdict(spec), sort_keys=True)),
        flat=params.flat,
        seed=np.int64(seed),
    )
    return path


def load_checkpoint(path) -> tuple[NetSpec, NetParams, int]:
    with np.load(Path(path), allow_pickle=False) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        spec = NetSpec(**json.loads(str(data["spec_json"])))
        flat = np.array(data["flat"], dtype=np.float64)
        seed = int(data["seed"])
    layout = param_layout(spec)
    expected = layout[-1].offset + layout[-1].size
    if flat.size != expected:
        raise ValueError(f"checkpoint has {flat.size} params, spec requires {expected}")
    return spec, NetParams(flat=flat, layout=layout), seed
