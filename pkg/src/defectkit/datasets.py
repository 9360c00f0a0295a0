"""Dataset manifests, deterministic splits, class-ratio subsets, k-fold plans.

A manifest is an ordered list of labeled samples. All randomized
operations are pure functions of (inputs, seed): shuffles use a PCG64
generator seeded through numpy's SeedSequence, so plans are reproducible
across runs and platforms.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyDatasetError,
    InsufficientPoolError,
    InvalidKError,
    TooFewSamplesError,
    UnreadableImageError,
)
from . import imageio

DEFECTIVE = "defective"
NON_DEFECTIVE = "non_defective"
LABELS = (NON_DEFECTIVE, DEFECTIVE)

BRIGHTNESS_UNSET = "unset"


@dataclass(frozen=True)
class Sample:
    id: str
    path: str
    label: str
    brightness: str = BRIGHTNESS_UNSET

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")


@dataclass(frozen=True)
class DatasetManifest:
    samples: tuple[Sample, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        ids = [s.id for s in self.samples]
        if len(set(ids)) != len(ids):
            raise ValueError("sample ids must be unique")

    def __len__(self) -> int:
        return len(self.samples)

    def ids(self) -> list[str]:
        return [s.id for s in self.samples]

    def by_id(self, sample_id: str) -> Sample:
        for s in self.samples:
            if s.id == sample_id:
                return s
        raise KeyError(sample_id)

    def subset(self, ids: list[str]) -> "DatasetManifest":
        wanted = set(ids)
        return DatasetManifest(tuple(s for s in self.samples if s.id in wanted))

    def count(self, label: str) -> int:
        return sum(1 for s in self.samples if s.label == label)


@dataclass(frozen=True)
class SplitPlan:
    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]
    seed: int


@dataclass(frozen=True)
class FoldPlan:
    k: int
    folds: tuple[tuple[str, ...], ...]
    seed: int


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def split_60_5_35(manifest: DatasetManifest, seed: int) -> SplitPlan:
    """Shuffle then allocate floor(60%) train, round(5%) validation, rest test.

    The rounding rule (floor / round-half-up / remainder) reproduces a
    1138/95/664 split for 1897 samples.
    """
    n = len(manifest)
    if n < 3:
        raise TooFewSamplesError(f"need at least 3 samples, got {n}")
    ids = np.array(manifest.ids(), dtype=object)
    order = _rng(seed).permutation(n)
    shuffled = [str(s) for s in ids[order]]
    n_train = int(np.floor(0.60 * n))
    n_val = int(np.floor(0.05 * n + 0.5))
    return SplitPlan(
        train=tuple(shuffled[:n_train]),
        validation=tuple(shuffled[n_train:n_train + n_val]),
        test=tuple(shuffled[n_train + n_val:]),
        seed=seed,
    )


def build_ratio_subset(
    manifest: DatasetManifest,
    ratio_nondef_per_def: int,
    brightness_filter: str = "all",
    seed: int = 0,
) -> DatasetManifest:
    """Rebuild the dataset at a fixed defective : non-defective ratio.

    Keeps every defective sample passing the brightness filter and samples
    ratio * (defective count) non-defective ones uniformly without
    replacement. brightness_filter is "all", "bright" or "dark".
    """
    if ratio_nondef_per_def < 1:
        raise ValueError("ratio must be >= 1")

    def passes(s: Sample) -> bool:
        return brightness_filter == "all" or s.brightness == brightness_filter

    defective = [s for s in manifest.samples if s.label == DEFECTIVE and passes(s)]
    pool = [s for s in manifest.samples if s.label == NON_DEFECTIVE and passes(s)]
    needed = ratio_nondef_per_def * len(defective)
    if needed > len(pool):
        raise InsufficientPoolError(needed - len(pool))
    chosen = _rng(seed).choice(len(pool), size=needed, replace=False)
    picked = {pool[int(i)].id for i in chosen}
    samples = [
        s for s in manifest.samples
        if (s.label == DEFECTIVE and passes(s)) or s.id in picked
    ]
    return DatasetManifest(tuple(samples))


def kfold_split(manifest: DatasetManifest, k: int, seed: int) -> FoldPlan:
    """Shuffle by seed, then deal ids round-robin into k folds."""
    n = len(manifest)
    if k < 2 or k > n:
        raise InvalidKError(f"need 2 <= k <= {n}, got k={k}")
    ids = np.array(manifest.ids(), dtype=object)
    order = _rng(seed).permutation(n)
    shuffled = [str(s) for s in ids[order]]
    folds = tuple(tuple(shuffled[i::k]) for i in range(k))
    return FoldPlan(k=k, folds=folds, seed=seed)


def stratified_kfold_split(manifest: DatasetManifest, k: int, seed: int) -> FoldPlan:
    """Class-stratified variant: each label is dealt round-robin separately."""
    n = len(manifest)
    if k < 2 or k > n:
        raise InvalidKError(f"need 2 <= k <= {n}, got k={k}")
    rng = _rng(seed)
    folds: list[list[str]] = [[] for _ in range(k)]
    offset = 0
    for label in LABELS:
        ids = [s.id for s in manifest.samples if s.label == label]
        order = rng.permutation(len(ids))
        for j, idx in enumerate(order):
            folds[(offset + j) % k].append(ids[int(idx)])
        offset += len(ids)
    return FoldPlan(k=k, folds=tuple(tuple(f) for f in folds), seed=seed)


def load_manifest(root: str | Path) -> DatasetManifest:
    """Build a manifest from `<root>/defective/*.png` and `<root>/non_defective/*.png`.

    Labels come from the directory names; brightness stays unset until
    categorized. Every file is decoded once so corrupt images fail fast.
    """
    root = Path(root)
    samples = []
    for label in (DEFECTIVE, NON_DEFECTIVE):
        folder = root / label
        if not folder.is_dir():
            continue
        for path in sorted(folder.glob("*.png")):
            try:
                imageio.read_image(path)
            except (UnreadableImageError, OSError) as exc:
                raise UnreadableImageError(f"unreadable image {path}: {exc}") from exc
            rel = str(path.relative_to(root))
            samples.append(Sample(id=rel, path=rel, label=label))
    if not samples:
        raise EmptyDatasetError(f"no images under {root}")
    return DatasetManifest(tuple(samples))


# -- file formats ---------------------------------------------------------------

def write_manifest_csv(path: str | Path, manifest: DatasetManifest) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "relative_path", "label", "brightness"])
        for s in manifest.samples:
            writer.writerow([s.id, s.path, s.label, s.brightness])


def read_manifest_csv(path: str | Path) -> DatasetManifest:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:4] != ["id", "relative_path", "label", "brightness"]:
            raise ValueError(f"unexpected manifest header: {header}")
        samples = tuple(
            Sample(id=row[0], path=row[1], label=row[2], brightness=row[3])
            for row in reader
        )
    return DatasetManifest(samples)


def write_split_json(path: str | Path, plan: SplitPlan) -> None:
    payload = {
        "seed": plan.seed,
        "train": list(plan.train),
        "validation": list(plan.validation),
        "test": list(plan.test),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_split_json(path: str | Path) -> SplitPlan:
    payload = json.loads(Path(path).read_text())
    return SplitPlan(
        train=tuple(payload["train"]),
        validation=tuple(payload["validation"]),
        test=tuple(payload["test"]),
        seed=payload["seed"],
    )


def write_fold_json(path: str | Path, plan: FoldPlan) -> None:
    payload = {"seed": plan.seed, "k": plan.k, "folds": [list(f) for f in plan.folds]}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_fold_json(path: str | Path) -> FoldPlan:
    payload = json.loads(Path(path).read_text())
    return FoldPlan(
        k=payload["k"],
        folds=tuple(tuple(f) for f in payload["folds"]),
        seed=payload["seed"],
    )
