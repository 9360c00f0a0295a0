"""End-to-end glue: preprocessing into arrays, split training, k-fold driver.

Labels map non_defective -> 0, defective -> 1 everywhere.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np

from . import imageio
from .datasets import DEFECTIVE, DatasetManifest, FoldPlan, SplitPlan
from .evaluation import ConfusionMatrix, accuracy, confusion, roc
from .features import BlockGrid, block_frequency_features
from .imagecore import CannyParams, canny, channels, resize, to_grayscale
from .nn import NetworkSpec, TrainConfig, train
from .nn.training import predictions_from_scores


def label_int(label: str) -> int:
    return 1 if label == DEFECTIVE else 0


def extract_features(
    manifest: DatasetManifest,
    root: str | Path,
    params: CannyParams,
    resolution: int = 50,
    grid: BlockGrid = BlockGrid(5, 5),
) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Edge-feature path: grayscale, resize, Canny, block frequencies.

    Returns (ids, features, labels) aligned with manifest order.
    """
    ids, rows, labels = [], [], []
    root = Path(root)
    for s in manifest.samples:
        img = imageio.read_image(root / s.path)
        if channels(img) == 3:
            img = to_grayscale(img)
        img = resize(img, resolution, resolution)
        rows.append(block_frequency_features(canny(img, params), grid))
        ids.append(s.id)
        labels.append(label_int(s.label))
    return ids, np.stack(rows), np.array(labels, dtype=np.int64)


def load_image_tensor(
    manifest: DatasetManifest, root: str | Path, resolution: int
) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Raw-image path: resize to resolution, scale to [0, 1] float32 NHWC."""
    root = Path(root)
    n = len(manifest)
    x = np.empty((n, resolution, resolution, 3), dtype=np.float32)
    ids, labels = [], []
    for i, s in enumerate(manifest.samples):
        img = imageio.read_image(root / s.path)
        if channels(img) == 1:
            img = np.repeat(img[:, :, None], 3, axis=2)
        img = resize(img, resolution, resolution)
        x[i] = img.astype(np.float32) / 255.0
        ids.append(s.id)
        labels.append(label_int(s.label))
    return ids, x, np.array(labels, dtype=np.int64)


def take(ids: list[str], x: np.ndarray, y: np.ndarray, wanted: tuple[str, ...]):
    index = {sid: i for i, sid in enumerate(ids)}
    rows = [index[sid] for sid in wanted]
    return x[rows], y[rows]


def train_on_split(
    spec: NetworkSpec,
    ids: list[str],
    x: np.ndarray,
    y: np.ndarray,
    plan: SplitPlan,
    cfg: TrainConfig,
):
    """Train on the plan's train/validation parts; evaluate on its test part.

    Returns (net, history, test confusion matrix, test ROC curve).
    """
    x_train, y_train = take(ids, x, y, plan.train)
    val = take(ids, x, y, plan.validation) if plan.validation else None
    net, history = train(spec, (x_train, y_train), val, cfg)

    x_test, y_test = take(ids, x, y, plan.test)
    scores = net.predict_scores(x_test)
    preds = predictions_from_scores(scores)
    cm = confusion(preds, y_test)
    positive_scores = scores[:, 1] if scores.ndim == 2 and scores.shape[1] == 2 else scores.reshape(-1)
    curve = roc(positive_scores, y_test) if len(set(y_test.tolist())) == 2 else None
    return net, history, cm, curve


def fold_seed(seed: int, fold_index: int) -> int:
    """Deterministic per-fold training seed derived from the run seed."""
    return int(np.random.SeedSequence([seed, fold_index]).generate_state(1, np.uint64)[0])


def run_kfold(
    spec_factory,
    ids: list[str],
    x: np.ndarray,
    y: np.ndarray,
    plan: FoldPlan,
    cfg: TrainConfig,
) -> dict:
    """Rotate each fold as the test set, train on the rest, average accuracy.

    Each fold trains a fresh model from a fold-derived seed and discards it
    after scoring.
    """
    per_fold = []
    confusions: list[ConfusionMatrix] = []
    for i, fold in enumerate(plan.folds):
        train_ids = tuple(s for j, f in enumerate(plan.folds) if j != i for s in f)
        x_train, y_train = take(ids, x, y, train_ids)
        x_test, y_test = take(ids, x, y, fold)
        fold_cfg = replace(cfg, seed=fold_seed(cfg.seed, i))
        net, _ = train(spec_factory(), (x_train, y_train), None, fold_cfg)
        preds = predictions_from_scores(net.predict_scores(x_test))
        cm = confusion(preds, y_test)
        per_fold.append(accuracy(cm))
        confusions.append(cm)
    pooled = ConfusionMatrix(
        (
            (
                sum(c.counts[0][0] for c in confusions),
                sum(c.counts[0][1] for c in confusions),
            ),
            (
                sum(c.counts[1][0] for c in confusions),
                sum(c.counts[1][1] for c in confusions),
            ),
        )
    )
    return {
        "k": plan.k,
        "seed": plan.seed,
        "fold_sizes": [len(f) for f in plan.folds],
        "per_fold_accuracy": per_fold,
        "mean_accuracy": float(np.mean(per_fold)),
        "pooled_confusion": [list(pooled.counts[0]), list(pooled.counts[1])],
    }
