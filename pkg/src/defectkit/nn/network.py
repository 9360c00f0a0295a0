"""Runtime network: parameter storage, forward pass, backpropagation.

The terminal activation (sigmoid or softmax) is computed in the forward
pass but its gradient is fused into the loss, so backpropagation starts
from d(loss)/d(logits) and skips the terminal layer. Inference on a
built network is read-only and safe to call from multiple threads;
training mutates parameters and is single-writer.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatchError
from . import layers as L
from .models import (
    CONV,
    DROPOUT,
    FC,
    LRN,
    MAXPOOL,
    RELU,
    SIGMOID,
    SOFTMAX_OUTPUT,
    NetworkSpec,
    param_shapes,
)

TERMINAL_KINDS = (SIGMOID, SOFTMAX_OUTPUT)


class Network:
    """A NetworkSpec plus its parameter arrays and backprop machinery."""

    def __init__(self, spec: NetworkSpec, dtype=np.float32):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        self.param_shapes = param_shapes(spec.input_shape, spec.layers)
        self.params: list[dict | None] = [
            None if ps is None else {
                "w": np.zeros(ps["w"], dtype=self.dtype),
                "b": np.zeros(ps["b"], dtype=self.dtype),
            }
            for ps in self.param_shapes
        ]
        self.grads: list[dict | None] = None
        self._caches = None
        self._logits = None

    def initialize(self, seed) -> "Network":
        """Fan-in scaled uniform init (limit sqrt(6/fan_in)), zero biases.

        `seed` is an int or a numpy SeedSequence.
        """
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        rng = np.random.Generator(np.random.PCG64(ss))
        for spec, p in zip(self.spec.layers, self.params):
            if p is None:
                continue
            w = p["w"]
            fan_in = int(np.prod(w.shape[:-1]))
            limit = np.sqrt(6.0 / fan_in)
            p["w"] = rng.uniform(-limit, limit, w.shape).astype(self.dtype)
            p["b"] = np.zeros_like(p["b"])
        return self

    def forward(self, x: np.ndarray, training: bool = False, rng=None) -> np.ndarray:
        """Run the batch through every layer; caches are kept when training."""
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[1:] != self.spec.input_shape:
            raise ShapeMismatchError(
                f"input shape {x.shape[1:]} != expected {self.spec.input_shape}"
            )
        caches = []
        out = x
        last = len(self.spec.layers) - 1
        self._logits = None
        for i, (spec, p) in enumerate(zip(self.spec.layers, self.params)):
            if i == last and spec.kind in TERMINAL_KINDS:
                self._logits = out
            if spec.kind == CONV:
                out, cache = L.conv2d_forward(
                    out, p["w"], p["b"], spec.stride, spec.padding, spec.groups
                )
            elif spec.kind == MAXPOOL:
                out, cache = L.maxpool_forward(out, spec.kernel, spec.stride, spec.padding)
            elif spec.kind == LRN:
                out, cache = L.lrn_forward(out, spec.window)
            elif spec.kind == RELU:
                out, cache = L.relu_forward(out)
            elif spec.kind == SIGMOID:
                out, cache = L.sigmoid_forward(out)
            elif spec.kind == DROPOUT:
                out, cache = L.dropout_forward(out, spec.rate, rng, training)
            elif spec.kind == FC:
                out, cache = L.fc_forward(out, p["w"], p["b"])
            elif spec.kind == SOFTMAX_OUTPUT:
                out, cache = L.softmax_forward(out)
            caches.append(cache)
        self._caches = caches if training else None
        return out

    @property
    def logits(self) -> np.ndarray:
        """Input to the terminal activation from the most recent forward."""
        if self._logits is None:
            raise ShapeMismatchError("no terminal activation logits recorded")
        return self._logits

    def backward_from_logits(self, dlogits: np.ndarray) -> np.ndarray:
        """Backpropagate d(loss)/d(logits), filling self.grads; returns dx."""
        if self._caches is None:
            raise ShapeMismatchError("backward requires a prior training-mode forward")
        self.grads = [None if p is None else {} for p in self.params]
        stop = len(self.spec.layers) - 1
        if self.spec.layers[stop].kind not in TERMINAL_KINDS:
            stop += 1  # no terminal activation; start from the true last layer
        d = dlogits
        for i in range(stop - 1, -1, -1):
            spec = self.spec.layers[i]
            cache = self._caches[i]
            if spec.kind == CONV:
                d, dw, db = L.conv2d_backward(d, cache)
                self.grads[i] = {"w": dw, "b": db}
            elif spec.kind == MAXPOOL:
                d = L.maxpool_backward(d, cache)
            elif spec.kind == LRN:
                d = L.lrn_backward(d, cache)
            elif spec.kind == RELU:
                d = L.relu_backward(d, cache)
            elif spec.kind == SIGMOID:
                d = L.sigmoid_backward(d, cache)
            elif spec.kind == DROPOUT:
                d = L.dropout_backward(d, cache)
            elif spec.kind == FC:
                d, dw, db = L.fc_backward(d, cache)
                self.grads[i] = {"w": dw, "b": db}
        self._caches = None
        return d

    def predict_scores(self, x: np.ndarray, batch_size: int = 128) -> np.ndarray:
        """Inference-mode outputs, batched to bound memory."""
        outs = [
            self.forward(x[i:i + batch_size], training=False)
            for i in range(0, len(x), batch_size)
        ]
        return np.concatenate(outs, axis=0)

    def num_params(self) -> int:
        return sum(
            p["w"].size + p["b"].size for p in self.params if p is not None
        )

    def snapshot_params(self) -> list[dict | None]:
        return [
            None if p is None else {"w": p["w"].copy(), "b": p["b"].copy()}
            for p in self.params
        ]

    def restore_params(self, snapshot: list[dict | None]) -> None:
        for p, s in zip(self.params, snapshot):
            if p is not None:
                p["w"][...] = s["w"]
                p["b"][...] = s["b"]
