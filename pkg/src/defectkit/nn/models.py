"""Declarative layer/network specs, shape inference, and the two builders.

`build_ann` produces the shallow edge-feature classifier (input vector ->
hidden sigmoid layer -> single sigmoid output, decision threshold 0.5).
`build_modified_alexnet` produces the AlexNet-style stack used for raw
image classification, with the first fully connected layer sized from the
flattened final pooling output for the chosen input resolution and a
2-way softmax head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import (
    InvalidTopologyError,
    ShapeMismatchError,
    UnsupportedResolutionError,
)

CONV = "conv"
RELU = "relu"
LRN = "lrn"
MAXPOOL = "maxpool"
FC = "fc"
DROPOUT = "dropout"
SOFTMAX_OUTPUT = "softmax_output"
SIGMOID = "sigmoid"

KINDS = (CONV, RELU, LRN, MAXPOOL, FC, DROPOUT, SOFTMAX_OUTPUT, SIGMOID)

SUPPORTED_RESOLUTIONS = (50, 100, 150, 200)

ANN_INPUT_FEATURES = 50
ANN_HIDDEN_SWEEP = (10, 20, 50, 100)


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    kernel: tuple[int, int] | None = None
    filters: int | None = None
    stride: tuple[int, int] = (1, 1)
    padding: tuple[int, int, int, int] = (0, 0, 0, 0)
    groups: int = 1
    units: int | None = None
    window: int = 5
    rate: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidTopologyError(f"unknown layer kind {self.kind!r}")
        if any(s < 1 for s in self.stride):
            raise InvalidTopologyError("stride entries must be >= 1")
        if any(p < 0 for p in self.padding):
            raise InvalidTopologyError("padding must be non-negative")
        if self.kind == DROPOUT and not (0.0 <= self.rate < 1.0):
            raise InvalidTopologyError(f"dropout rate {self.rate} outside [0, 1)")
        if self.kind == LRN and self.window % 2 == 0:
            raise InvalidTopologyError("LRN window must be odd")
        if self.kind == CONV and (self.kernel is None or self.filters is None):
            raise InvalidTopologyError("conv layers need kernel and filters")
        if self.kind == MAXPOOL and self.kernel is None:
            raise InvalidTopologyError("maxpool layers need a kernel")
        if self.kind == FC and (self.units is None or self.units < 1):
            raise InvalidTopologyError("fc layers need units >= 1")


@dataclass(frozen=True)
class NetworkSpec:
    input_shape: tuple[int, ...]
    layers: tuple[LayerSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        infer_shapes(self.input_shape, self.layers)  # raises if shapes do not compose


def _conv_extent(size: int, k: int, pad_a: int, pad_b: int, stride: int) -> int:
    padded = size + pad_a + pad_b
    if padded < k:
        raise ShapeMismatchError(f"kernel {k} exceeds padded extent {padded}")
    return (padded - k) // stride + 1


def infer_shapes(
    input_shape: tuple[int, ...], layers: tuple[LayerSpec, ...]
) -> list[tuple[int, ...]]:
    """Output shape of every layer in order, excluding the batch axis."""
    shapes = []
    cur = tuple(input_shape)
    for spec in layers:
        if spec.kind == CONV:
            if len(cur) != 3:
                raise ShapeMismatchError(f"conv needs a HxWxC input, got {cur}")
            h, w, cin = cur
            kh, kw = spec.kernel
            if cin % spec.groups or spec.filters % spec.groups:
                raise ShapeMismatchError(
                    f"groups={spec.groups} must divide cin={cin} and filters={spec.filters}"
                )
            oh = _conv_extent(h, kh, spec.padding[0], spec.padding[1], spec.stride[0])
            ow = _conv_extent(w, kw, spec.padding[2], spec.padding[3], spec.stride[1])
            cur = (oh, ow, spec.filters)
        elif spec.kind == MAXPOOL:
            if len(cur) != 3:
                raise ShapeMismatchError(f"maxpool needs a HxWxC input, got {cur}")
            h, w, c = cur
            kh, kw = spec.kernel
            oh = _conv_extent(h, kh, spec.padding[0], spec.padding[1], spec.stride[0])
            ow = _conv_extent(w, kw, spec.padding[2], spec.padding[3], spec.stride[1])
            cur = (oh, ow, c)
        elif spec.kind == LRN:
            if len(cur) != 3:
                raise ShapeMismatchError(f"lrn needs a HxWxC input, got {cur}")
        elif spec.kind == FC:
            cur = (spec.units,)
        elif spec.kind in (RELU, SIGMOID, DROPOUT, SOFTMAX_OUTPUT):
            pass
        shapes.append(cur)
    return shapes


def param_shapes(
    input_shape: tuple[int, ...], layers: tuple[LayerSpec, ...]
) -> list[dict | None]:
    """Per-layer weight/bias shapes, None for parameterless layers."""
    out_shapes = infer_shapes(input_shape, layers)
    result = []
    cur = tuple(input_shape)
    for spec, out in zip(layers, out_shapes):
        if spec.kind == CONV:
            kh, kw = spec.kernel
            cin_g = cur[2] // spec.groups
            result.append({"w": (kh, kw, cin_g, spec.filters), "b": (spec.filters,)})
        elif spec.kind == FC:
            d_in = math.prod(cur)
            result.append({"w": (d_in, spec.units), "b": (spec.units,)})
        else:
            result.append(None)
        cur = out
    return result


def build_ann(hidden: int, in_features: int = ANN_INPUT_FEATURES) -> NetworkSpec:
    """Shallow classifier: in_features -> hidden (sigmoid) -> 1 (sigmoid)."""
    if hidden < 1:
        raise InvalidTopologyError(f"hidden neuron count must be >= 1, got {hidden}")
    if in_features < 1:
        raise InvalidTopologyError(f"in_features must be >= 1, got {in_features}")
    return NetworkSpec(
        input_shape=(in_features,),
        layers=(
            LayerSpec(FC, units=hidden),
            LayerSpec(SIGMOID),
            LayerSpec(FC, units=1),
            LayerSpec(SIGMOID),
        ),
    )


def build_modified_alexnet(input_resolution: int) -> NetworkSpec:
    """AlexNet-style stack for square RGB inputs of 50/100/150/200 pixels.

    conv2, conv4 and conv5 use two channel groups (their per-filter channel
    count is half the incoming channels); all pooling is 3x3 stride 2; the
    first fully connected layer's input is the flattened final pool output
    and the head is a 2-way softmax.
    """
    if input_resolution not in SUPPORTED_RESOLUTIONS:
        raise UnsupportedResolutionError(
            f"resolution {input_resolution} not in {SUPPORTED_RESOLUTIONS}"
        )
    layers = (
        LayerSpec(CONV, kernel=(11, 11), filters=96, stride=(4, 4)),
        LayerSpec(RELU),
        LayerSpec(LRN, window=5),
        LayerSpec(MAXPOOL, kernel=(3, 3), stride=(2, 2)),
        LayerSpec(CONV, kernel=(5, 5), filters=256, padding=(2, 2, 2, 2), groups=2),
        LayerSpec(RELU),
        LayerSpec(LRN, window=5),
        LayerSpec(MAXPOOL, kernel=(3, 3), stride=(2, 2)),
        LayerSpec(CONV, kernel=(3, 3), filters=384, padding=(1, 1, 1, 1)),
        LayerSpec(RELU),
        LayerSpec(CONV, kernel=(3, 3), filters=384, padding=(1, 1, 1, 1), groups=2),
        LayerSpec(RELU),
        LayerSpec(CONV, kernel=(3, 3), filters=256, padding=(1, 1, 1, 1), groups=2),
        LayerSpec(RELU),
        LayerSpec(MAXPOOL, kernel=(3, 3), stride=(2, 2), padding=(2, 2, 2, 2)),
        LayerSpec(FC, units=4096),
        LayerSpec(RELU),
        LayerSpec(DROPOUT, rate=0.5),
        LayerSpec(FC, units=4096),
        LayerSpec(RELU),
        LayerSpec(DROPOUT, rate=0.5),
        LayerSpec(FC, units=2),
        LayerSpec(SOFTMAX_OUTPUT),
    )
    return NetworkSpec(input_shape=(input_resolution, input_resolution, 3), layers=layers)
