"""Run configuration: documented defaults, config-file merging, run records.

Every command resolves its options as flags > config file > documented
defaults and records the resolved values, the master seed, the derived
sub-seeds and sha256 digests of the written artifacts in a run.json next
to its outputs. All randomness flows from the single master seed;
sub-seeds are derived with a fixed splitting rule per purpose.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError

# Reference defaults; a bare invocation reproduces the standard pipeline
# shape (Canny thresholds [0.5, 0.9], 5x5 grid, 50x50 edge-path resize,
# 50 hidden neurons, 10 folds).
DEFAULTS = {
    "seed": 0,
    # preprocessing
    "canny_low": 0.5,
    "canny_high": 0.9,
    "canny_sigma": math.sqrt(2.0),
    "resolution": 50,
    "grid_rows": 5,
    "grid_cols": 5,
    # models
    "hidden": 50,
    "cnn_resolution": 150,
    # training
    "momentum": 0.9,
    "batch_size": 32,
    "epochs": None,         # per-pipeline fallback below
    "learning_rate": None,  # per-pipeline fallback below
    "patience": None,       # ann_patience below; CNN path has no early stop
    # evaluation
    "k": 10,
    "ratio": 0,
    "brightness_filter": "all",
    "pipeline": "cnn",
    "part": "test",
    # synthetic generator
    "n_defective": 50,
    "n_nondefective": 50,
    "size": 64,
    "brightness": "bright",
    "grain_scale": 8,
    "defect_count": 3,
    "defect_radius": (4, 9),
    "defect_contrast": 90,
}

# Pipeline-specific training defaults.
PIPELINE_DEFAULTS = {
    "ann_epochs": 200,
    "ann_learning_rate": 0.01,
    "ann_patience": 10,
    "cnn_epochs": 100,
    "cnn_learning_rate": 0.001,
}

# Purpose codes for sub-seed derivation; part of the on-disk contract.
_SEED_DOMAINS = {"synth": 0, "split": 1, "train": 2, "subset": 3, "fold": 4}


def derive_subseed(master: int, purpose: str) -> int:
    if purpose not in _SEED_DOMAINS:
        raise ConfigError(f"unknown seed purpose {purpose!r}")
    ss = np.random.SeedSequence([master, _SEED_DOMAINS[purpose]])
    return int(ss.generate_state(1, np.uint64)[0])


def derive_subseeds(master: int) -> dict[str, int]:
    return {name: derive_subseed(master, name) for name in _SEED_DOMAINS}


def load_config_file(path: str | Path | None) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = set(data) - set(DEFAULTS) - set(PIPELINE_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def resolve_options(args_dict: dict, file_cfg: dict, pipeline: str) -> dict:
    """Merge one command's argparse namespace over file config over defaults."""
    resolved = {}
    for key, value in args_dict.items():
        if key in ("config", "command"):
            continue
        if value is None:
            value = file_cfg.get(key, DEFAULTS.get(key))
        if isinstance(value, Path):
            value = str(value)
        resolved[key] = value
    for key in ("epochs", "learning_rate"):
        if key in resolved and resolved[key] is None:
            fallback = f"{pipeline}_{key}"
            resolved[key] = file_cfg.get(fallback, PIPELINE_DEFAULTS[fallback])
    if "patience" in resolved and resolved["patience"] is None:
        resolved["patience"] = file_cfg.get("ann_patience", PIPELINE_DEFAULTS["ann_patience"])
    return resolved


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_run_record(
    out_dir: str | Path,
    command: str,
    resolved: dict,
    artifacts: list[str | Path],
) -> Path:
    """Write run.json capturing resolved config, seeds and artifact digests."""
    out_dir = Path(out_dir)
    seed = resolved.get("seed", DEFAULTS["seed"])
    record = {
        "command": command,
        "config": {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in sorted(resolved.items())
        },
        "seed": seed,
        "sub_seeds": derive_subseeds(seed),
        "artifacts": {
            str(Path(p).relative_to(out_dir)): sha256_file(p) for p in artifacts
        },
    }
    path = out_dir / "run.json"
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return path
