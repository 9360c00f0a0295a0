"""Block-partition frequency features and bright/dark image categorization.

The edge-feature path splits a binary edge map into an equal grid
(5x5 in the reference configuration) and records, per block, how often
each of the two intensities occurs. Counts are normalized by block area
so every value lands in [0, 1] and each block's pair sums to 1; raw
counts are available behind a flag.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IndivisibleDimensionsError, NonBinaryInputError
from .imagecore import channels, ensure_image, to_grayscale

BRIGHT = "bright"
DARK = "dark"

BRIGHTNESS_INTENSITY_THRESHOLD = 125
BRIGHTNESS_FRACTION_THRESHOLD = 0.70


@dataclass(frozen=True)
class BlockGrid:
    rows: int = 5
    cols: int = 5

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise IndivisibleDimensionsError("grid must have rows >= 1 and cols >= 1")


def block_partition(edge_map: np.ndarray, grid: BlockGrid) -> list[np.ndarray]:
    """Split a map into rows*cols equal non-overlapping blocks, row-major."""
    ensure_image(edge_map)
    h, w = edge_map.shape[:2]
    if h % grid.rows != 0 or w % grid.cols != 0:
        raise IndivisibleDimensionsError(
            f"{h}x{w} map not divisible by {grid.rows}x{grid.cols} grid"
        )
    bh, bw = h // grid.rows, w // grid.cols
    return [
        edge_map[r * bh:(r + 1) * bh, c * bw:(c + 1) * bw]
        for r in range(grid.rows)
        for c in range(grid.cols)
    ]


def block_frequency_features(
    edge_map: np.ndarray, grid: BlockGrid, normalize: bool = True
) -> np.ndarray:
    """Per-block (zero count, 255 count) pairs concatenated row-major.

    With normalize=True (default) counts are divided by the block area,
    giving a vector of length 2*rows*cols in [0, 1] whose per-block pairs
    sum to 1. normalize=False emits the raw counts.
    """
    if edge_map.ndim != 2:
        raise NonBinaryInputError("edge map must be single-channel")
    if not np.isin(edge_map, (0, 255)).all():
        raise NonBinaryInputError("edge map must contain only 0 and 255")
    blocks = block_partition(edge_map, grid)
    area = blocks[0].size
    values = np.empty(2 * len(blocks), dtype=np.float64)
    for i, block in enumerate(blocks):
        ones = int(np.count_nonzero(block))
        zeros = block.size - ones
        values[2 * i] = zeros
        values[2 * i + 1] = ones
    return values / area if normalize else values


def brightness_category(
    img: np.ndarray,
    threshold_intensity: int = BRIGHTNESS_INTENSITY_THRESHOLD,
    threshold_fraction: float = BRIGHTNESS_FRACTION_THRESHOLD,
) -> str:
    """Classify an image as bright or dark from its intensity histogram.

    Bright iff strictly more than threshold_fraction of the pixels have
    grayscale intensity strictly greater than threshold_intensity.
    """
    ensure_image(img)
    gray = to_grayscale(img) if channels(img) == 3 else img
    if gray.ndim == 3:
        gray = gray[:, :, 0]
    above = int(np.count_nonzero(gray > threshold_intensity))
    return BRIGHT if above / gray.size > threshold_fraction else DARK


def write_feature_csv(
    path: str | Path,
    ids: list[str],
    labels: list[str],
    vectors: np.ndarray,
) -> None:
    """One row per image: id, label, then the feature values."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if len(ids) != len(labels) or len(ids) != vectors.shape[0]:
        raise ValueError("ids, labels and vectors must have matching lengths")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"] + [f"f{i:03d}" for i in range(vectors.shape[1])])
        for sid, label, row in zip(ids, labels, vectors):
            writer.writerow([sid, label] + [repr(float(v)) for v in row])


def read_feature_csv(path: str | Path) -> tuple[list[str], list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_features = len(header) - 2
        ids, labels, rows = [], [], []
        for record in reader:
            ids.append(record[0])
            labels.append(record[1])
            rows.append([float(v) for v in record[2:]])
    matrix = np.array(rows, dtype=np.float64).reshape(len(ids), n_features)
    return ids, labels, matrix
