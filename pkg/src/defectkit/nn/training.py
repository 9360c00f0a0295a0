"""Mini-batch SGD with momentum, loss selection, and early stopping.

The loss follows the terminal layer: networks ending in a single sigmoid
train with binary cross-entropy, networks ending in softmax train with
cross-entropy; both gradients are taken with respect to the logits for
stability. Training is bit-reproducible for a fixed seed and thread
count: parameter init, batch order and dropout masks all derive from the
run seed through a fixed splitting rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NonFiniteLossError, ShapeMismatchError
from . import layers as L
from .models import SIGMOID, SOFTMAX_OUTPUT, NetworkSpec
from .network import Network


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    seed: int = 0
    early_stop_patience: int = 0  # 0 disables early stopping

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (0.0 <= self.momentum < 1.0):
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.early_stop_patience < 0:
            raise ConfigError("early_stop_patience must be >= 0")


def _loss_and_dlogits(net: Network, logits: np.ndarray, labels: np.ndarray):
    terminal = net.spec.layers[-1].kind
    if terminal == SOFTMAX_OUTPUT:
        return L.softmax_xent_loss(logits, labels)
    if terminal == SIGMOID:
        return L.bce_with_logits_loss(logits, labels)
    raise ShapeMismatchError(f"no loss defined for terminal layer {terminal!r}")


def predictions_from_scores(scores: np.ndarray) -> np.ndarray:
    """Class decisions: argmax for 2-way softmax, threshold 0.5 for sigmoid."""
    if scores.ndim == 2 and scores.shape[1] == 2:
        return np.argmax(scores, axis=1)
    return (scores.reshape(-1) >= 0.5).astype(np.int64)


def evaluate(net: Network, x: np.ndarray, y: np.ndarray, batch_size: int = 128):
    """(mean loss, accuracy fraction) on a dataset in inference mode."""
    total_loss = 0.0
    correct = 0
    for i in range(0, len(x), batch_size):
        xb, yb = x[i:i + batch_size], y[i:i + batch_size]
        scores = net.forward(xb, training=False)
        loss, _ = _loss_and_dlogits(net, net.logits, yb)
        total_loss += loss * len(xb)
        correct += int((predictions_from_scores(scores) == yb).sum())
    return total_loss / len(x), correct / len(x)


def train(
    spec: NetworkSpec,
    train_set: tuple[np.ndarray, np.ndarray],
    val_set: tuple[np.ndarray, np.ndarray] | None,
    cfg: TrainConfig,
    dtype=np.float32,
) -> tuple[Network, list[dict]]:
    """Train a fresh network; returns (network, per-epoch history).

    History rows carry epoch, train_loss, train_acc and, when a validation
    set is given, val_loss / val_acc. With early_stop_patience > 0,
    training stops once validation loss has failed to improve for that
    many consecutive epochs and the best-validation parameters are
    restored.
    """
    x_train, y_train = train_set
    if len(x_train) != len(y_train):
        raise ShapeMismatchError("training features and labels differ in length")

    seeds = np.random.SeedSequence(cfg.seed).spawn(3)
    net = Network(spec, dtype=dtype).initialize(seeds[0])
    shuffle_rng = np.random.Generator(np.random.PCG64(seeds[1]))
    dropout_rng = np.random.Generator(np.random.PCG64(seeds[2]))

    velocity = [
        None if p is None else {"w": np.zeros_like(p["w"]), "b": np.zeros_like(p["b"])}
        for p in net.params
    ]

    history: list[dict] = []
    best_val = math.inf
    best_params = None
    stall = 0
    use_early_stop = val_set is not None and cfg.early_stop_patience > 0

    n = len(x_train)
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        epoch_correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb = x_train[idx]
            yb = y_train[idx]
            scores = net.forward(xb, training=True, rng=dropout_rng)
            loss, dlogits = _loss_and_dlogits(net, net.logits, yb)
            if not math.isfinite(loss):
                raise NonFiniteLossError(epoch)
            epoch_loss += loss * len(xb)
            epoch_correct += int((predictions_from_scores(scores) == yb).sum())
            net.backward_from_logits(dlogits.astype(net.dtype))
            for p, v, g in zip(net.params, velocity, net.grads):
                if p is None:
                    continue
                for key in ("w", "b"):
                    v[key] = cfg.momentum * v[key] - cfg.learning_rate * g[key]
                    p[key] += v[key]

        row = {
            "epoch": epoch,
            "train_loss": epoch_loss / n,
            "train_acc": epoch_correct / n,
        }
        if val_set is not None:
            val_loss, val_acc = evaluate(net, val_set[0], val_set[1])
            if not math.isfinite(val_loss):
                raise NonFiniteLossError(epoch)
            row["val_loss"] = val_loss
            row["val_acc"] = val_acc
            if use_early_stop:
                if val_loss < best_val:
                    best_val = val_loss
                    best_params = net.snapshot_params()
                    stall = 0
                else:
                    stall += 1
        history.append(row)
        if use_early_stop and stall >= cfg.early_stop_patience:
            break

    if use_early_stop and best_params is not None:
        net.restore_params(best_params)
    return net, history
