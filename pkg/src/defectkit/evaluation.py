"""Binary-classification reporting: confusion matrix, accuracy, ROC/AUC.

Confusion matrices are 2x2 with rows = actual class and columns =
predicted class, class order (non_defective, defective); only that
orientation makes trace/total reproduce published accuracies from their
printed matrices. ROC sweeps descending distinct scores with ties grouped
into a single step, and the trapezoidal AUC then equals the Mann-Whitney
pairwise statistic.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import EmptyMatrixError, LengthMismatchError, SingleClassError

CLASS_NAMES = ("non_defective", "defective")


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[actual][predicted], class order (non_defective, defective)."""

    counts: tuple[tuple[int, int], tuple[int, int]]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def trace(self) -> int:
        return self.counts[0][0] + self.counts[1][1]


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]  # (false positive rate, true positive rate)
    auc: float


def confusion(preds, labels) -> ConfusionMatrix:
    """Tally (actual, predicted) pairs of 0/1 values."""
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise LengthMismatchError(
            f"predictions {preds.shape} and labels {labels.shape} must be equal-length vectors"
        )
    if not (np.isin(preds, (0, 1)).all() and np.isin(labels, (0, 1)).all()):
        raise LengthMismatchError("predictions and labels must be binary (0/1)")
    cells = [[0, 0], [0, 0]]
    for a, p in zip(labels.astype(int), preds.astype(int)):
        cells[a][p] += 1
    return ConfusionMatrix(((cells[0][0], cells[0][1]), (cells[1][0], cells[1][1])))


def accuracy(cm: ConfusionMatrix) -> float:
    """Percentage of correct predictions, 100 * trace / total."""
    if cm.total == 0:
        raise EmptyMatrixError("confusion matrix has no samples")
    return 100.0 * cm.trace / cm.total


def accuracy_fraction(cm: ConfusionMatrix) -> Fraction:
    """Exact rational accuracy in percent, for comparisons before rounding."""
    if cm.total == 0:
        raise EmptyMatrixError("confusion matrix has no samples")
    return Fraction(100 * cm.trace, cm.total)


def format_accuracy(value: float | Fraction) -> str:
    """One-decimal display with round-half-up, e.g. 80.271 -> '80.3'."""
    frac = value if isinstance(value, Fraction) else Fraction(value)
    tenths = int(frac * 10 + Fraction(1, 2))
    return f"{tenths // 10}.{tenths % 10}"


def roc(scores, labels) -> RocCurve:
    """ROC over descending score thresholds; positive class is label 1.

    Equal scores collapse into a single threshold step. Points start at
    (0, 0) and end at (1, 1); AUC is the trapezoidal integral.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise LengthMismatchError("scores and labels must be equal-length vectors")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("ROC needs both classes present")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order].astype(np.int64)
    tp = np.cumsum(y)
    fp = np.cumsum(1 - y)
    distinct = np.nonzero(np.diff(s))[0]  # last index of each tied group, except the final one
    cut = np.concatenate([distinct, [len(s) - 1]])

    points = [(0.0, 0.0)]
    for i in cut:
        points.append((fp[i] / n_neg, tp[i] / n_pos))
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return RocCurve(points=tuple(points), auc=auc)


# -- output formats --------------------------------------------------------------

def confusion_text(cm: ConfusionMatrix) -> str:
    """Aligned-text table with the declared orientation."""
    rows = [
        ["actual \\ predicted", *CLASS_NAMES],
        [CLASS_NAMES[0], str(cm.counts[0][0]), str(cm.counts[0][1])],
        [CLASS_NAMES[1], str(cm.counts[1][0]), str(cm.counts[1][1])],
    ]
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    return "\n".join(
        "  ".join(cell.rjust(widths[i]) for i, cell in enumerate(row)) for row in rows
    )


def metrics_json(cm: ConfusionMatrix, curve: RocCurve | None = None) -> dict:
    payload = {
        "class_order": list(CLASS_NAMES),
        "confusion": [list(cm.counts[0]), list(cm.counts[1])],
        "accuracy_percent": accuracy(cm),
        "accuracy_display": format_accuracy(accuracy_fraction(cm)),
    }
    if curve is not None:
        payload["auc"] = curve.auc
    return payload


def write_metrics_json(path: str | Path, cm: ConfusionMatrix, curve: RocCurve | None = None) -> None:
    Path(path).write_text(json.dumps(metrics_json(cm, curve), indent=2, sort_keys=True) + "\n")


def write_roc_csv(path: str | Path, curve: RocCurve) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr"])
        for fpr, tpr in curve.points:
            writer.writerow([repr(fpr), repr(tpr)])
