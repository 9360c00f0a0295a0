"""Synthetic leather-like textures with optional dark blob defects.

Stands in for a physical image collection: multi-octave value noise
shaped into a tinted grain, with defective samples receiving a fixed
number of irregular dark elliptical blobs. Every image is a pure
function of (params, group, index): per-image RNG streams are spawned
from the run seed, so generation is reproducible and order-independent.
Defect masks are emitted alongside the images; a defective image differs
from its paired base texture only inside its mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imageio
from .datasets import DEFECTIVE, NON_DEFECTIVE, DatasetManifest, Sample, write_manifest_csv
from .features import BRIGHT, DARK, brightness_category
from .imagecore import round_half_up

# Intensity windows keeping the categorizer decision unambiguous: with the
# tint below, grayscale is ~0.930 * L, so bright pixels stay above 125 and
# dark ones below.
_BRIGHT_RANGE = (150.0, 230.0)
_DARK_RANGE = (40.0, 120.0)
_TINT = (1.0, 0.92, 0.80)


@dataclass(frozen=True)
class SynthParams:
    size: int = 64
    base_brightness: str = BRIGHT
    grain_scale: int = 8
    defect_count: int = 3
    defect_radius: tuple[int, int] = (4, 9)
    defect_contrast: int = 90
    seed: int = 0

    def __post_init__(self):
        if self.size < 8:
            raise ValueError("size must be >= 8")
        if self.base_brightness not in (BRIGHT, DARK):
            raise ValueError(f"base_brightness must be {BRIGHT!r} or {DARK!r}")
        if self.grain_scale < 1:
            raise ValueError("grain_scale must be >= 1")
        if self.defect_radius[0] < 1 or self.defect_radius[0] > self.defect_radius[1]:
            raise ValueError("defect_radius must be an increasing positive range")
        if not (0 <= self.defect_contrast <= 255):
            raise ValueError("defect_contrast must be in [0, 255]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def _value_noise(rng: np.random.Generator, size: int, cell: int) -> np.ndarray:
    """Smoothstep-interpolated lattice noise in [0, 1]."""
    n_lattice = size // cell + 2
    lattice = rng.random((n_lattice, n_lattice))
    coords = np.arange(size) / cell
    i = np.floor(coords).astype(np.intp)
    f = coords - i
    s = f * f * (3.0 - 2.0 * f)
    v00 = lattice[np.ix_(i, i)]
    v01 = lattice[np.ix_(i, i + 1)]
    v10 = lattice[np.ix_(i + 1, i)]
    v11 = lattice[np.ix_(i + 1, i + 1)]
    sx = s[None, :]
    sy = s[:, None]
    top = v00 * (1.0 - sx) + v01 * sx
    bottom = v10 * (1.0 - sx) + v11 * sx
    return top * (1.0 - sy) + bottom * sy


def _grain_field(rng: np.random.Generator, size: int, grain_scale: int) -> np.ndarray:
    """Four-octave value noise normalized to [0, 1]."""
    field = np.zeros((size, size))
    amp = 1.0
    for octave in range(4):
        cell = max(1, grain_scale >> octave)
        field += amp * _value_noise(rng, size, cell)
        amp *= 0.5
    lo, hi = field.min(), field.max()
    return (field - lo) / (hi - lo) if hi > lo else np.zeros_like(field)


def _blob_mask(rng: np.random.Generator, size: int, radius_range: tuple[int, int]) -> np.ndarray:
    """One irregular ellipse: rotated, with harmonic boundary jitter."""
    r_max = radius_range[1]
    margin = min(r_max + 1, size // 2 - 1)
    cy = rng.uniform(margin, size - margin)
    cx = rng.uniform(margin, size - margin)
    ry = rng.uniform(radius_range[0], radius_range[1])
    rx = rng.uniform(radius_range[0], radius_range[1])
    phi = rng.uniform(0.0, math.pi)
    harmonics = rng.normal(0.0, 0.08, size=6)  # cos/sin amplitudes for k = 2, 3, 4

    yy, xx = np.mgrid[0:size, 0:size]
    dy = yy - cy
    dx = xx - cx
    u = (dx * math.cos(phi) + dy * math.sin(phi)) / rx
    v = (-dx * math.sin(phi) + dy * math.cos(phi)) / ry
    rho = np.sqrt(u * u + v * v)
    theta = np.arctan2(v, u)
    jitter = np.ones_like(rho)
    for j, k in enumerate((2, 3, 4)):
        jitter += harmonics[2 * j] * np.cos(k * theta) + harmonics[2 * j + 1] * np.sin(k * theta)
    return rho <= np.maximum(jitter, 0.3)


def _image_rng(seed: int, group: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, group, index])))


def render_image(params: SynthParams, group: int, index: int, defective: bool):
    """Render one sample; returns (rgb uint8, mask uint8 or None).

    The base texture is drawn before any defect randomness, so a defective
    image and its base differ only inside the returned mask.
    """
    rng = _image_rng(params.seed, group, index)
    lo, hi = _BRIGHT_RANGE if params.base_brightness == BRIGHT else _DARK_RANGE
    luminance = lo + _grain_field(rng, params.size, params.grain_scale) * (hi - lo)

    img = np.empty((params.size, params.size, 3), dtype=np.uint8)
    for c, tint in enumerate(_TINT):
        img[:, :, c] = np.clip(round_half_up(luminance * tint), 0, 255).astype(np.uint8)

    if not defective:
        return img, None
    mask = np.zeros((params.size, params.size), dtype=bool)
    for _ in range(params.defect_count):
        mask |= _blob_mask(rng, params.size, params.defect_radius)
    lowered = np.clip(img.astype(np.int16) - params.defect_contrast, 0, 255).astype(np.uint8)
    img = np.where(mask[:, :, None], lowered, img)
    return img, (mask.astype(np.uint8) * 255)


def generate_synthetic(
    params: SynthParams,
    n_defective: int,
    n_nondefective: int,
    root: str | Path,
) -> DatasetManifest:
    """Write a labeled synthetic dataset under `root` and return its manifest.

    Layout: defective/*.png, non_defective/*.png, masks/*.png for the
    defective samples, plus manifest.csv. Brightness in the manifest is
    computed by the categorizer, not assumed from the target.
    """
    if n_defective < 0 or n_nondefective < 0:
        raise ValueError("sample counts must be >= 0")
    root = Path(root)
    (root / DEFECTIVE).mkdir(parents=True, exist_ok=True)
    (root / NON_DEFECTIVE).mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(parents=True, exist_ok=True)

    samples = []
    for index in range(n_defective):
        img, mask = render_image(params, group=0, index=index, defective=True)
        rel = f"{DEFECTIVE}/def_{index:04d}.png"
        imageio.write_image(root / rel, img)
        imageio.write_image(root / "masks" / f"def_{index:04d}_mask.png", mask)
        samples.append(
            Sample(id=rel, path=rel, label=DEFECTIVE, brightness=brightness_category(img))
        )
    for index in range(n_nondefective):
        img, _ = render_image(params, group=1, index=index, defective=False)
        rel = f"{NON_DEFECTIVE}/nd_{index:04d}.png"
        imageio.write_image(root / rel, img)
        samples.append(
            Sample(id=rel, path=rel, label=NON_DEFECTIVE, brightness=brightness_category(img))
        )

    manifest = DatasetManifest(tuple(samples))
    write_manifest_csv(root / "manifest.csv", manifest)
    return manifest
