"""From-scratch neural network core: layers, model builders, training."""

from .models import (
    CONV,
    DROPOUT,
    FC,
    LRN,
    MAXPOOL,
    RELU,
    SIGMOID,
    SOFTMAX_OUTPUT,
    LayerSpec,
    NetworkSpec,
    build_ann,
    build_modified_alexnet,
    infer_shapes,
)
from .network import Network
from .training import TrainConfig, train
from .modelio import load_model, save_model

__all__ = [
    "CONV", "DROPOUT", "FC", "LRN", "MAXPOOL", "RELU", "SIGMOID",
    "SOFTMAX_OUTPUT", "LayerSpec", "NetworkSpec", "build_ann",
    "build_modified_alexnet", "infer_shapes", "Network", "TrainConfig",
    "train", "load_model", "save_model",
]
