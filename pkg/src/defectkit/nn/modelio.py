"""Versioned model files.

Layout: 4-byte magic b"DFKT", little-endian uint32 header length, UTF-8
JSON header, then the weight blob: every parameterized layer's weight and
bias as little-endian IEEE-754 single precision, in layer order. The JSON
header carries the format version, the network spec, array shapes, and a
free-form metadata dict (seed, training config, preprocessing). Loaders
reject unknown format versions.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError
from .models import LayerSpec, NetworkSpec
from .network import Network

MAGIC = b"DFKT"
FORMAT_VERSION = 1


def _layer_to_json(spec: LayerSpec) -> dict:
    d = asdict(spec)
    d["kernel"] = list(spec.kernel) if spec.kernel is not None else None
    d["stride"] = list(spec.stride)
    d["padding"] = list(spec.padding)
    return d


def _layer_from_json(d: dict) -> LayerSpec:
    return LayerSpec(
        kind=d["kind"],
        kernel=tuple(d["kernel"]) if d["kernel"] is not None else None,
        filters=d["filters"],
        stride=tuple(d["stride"]),
        padding=tuple(d["padding"]),
        groups=d["groups"],
        units=d["units"],
        window=d["window"],
        rate=d["rate"],
    )


def save_model(path: str | Path, net: Network, meta: dict | None = None) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "input_shape": list(net.spec.input_shape),
        "layers": [_layer_to_json(s) for s in net.spec.layers],
        "params": [
            None if p is None else {"w": list(p["w"].shape), "b": list(p["b"].shape)}
            for p in net.params
        ],
        "meta": meta or {},
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    blob = b"".join(
        part
        for p in net.params
        if p is not None
        for part in (
            np.ascontiguousarray(p["w"], dtype="<f4").tobytes(),
            np.ascontiguousarray(p["b"], dtype="<f4").tobytes(),
        )
    )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(blob)


def load_model(path: str | Path) -> tuple[Network, dict]:
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file")
    header_len = struct.unpack("<I", raw[4:8])[0]
    try:
        header = json.loads(raw[8:8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: corrupt header: {exc}") from exc
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unknown format version {version!r}")

    spec = NetworkSpec(
        input_shape=tuple(header["input_shape"]),
        layers=tuple(_layer_from_json(d) for d in header["layers"]),
    )
    net = Network(spec, dtype=np.float32)
    blob = raw[8 + header_len:]
    offset = 0
    for p, declared in zip(net.params, header["params"]):
        if p is None:
            if declared is not None:
                raise ModelFormatError(f"{path}: parameter layout mismatch")
            continue
        for key in ("w", "b"):
            shape = tuple(declared[key])
            if shape != p[key].shape:
                raise ModelFormatError(
                    f"{path}: stored {key} shape {shape} != expected {p[key].shape}"
                )
            count = int(np.prod(shape))
            end = offset + 4 * count
            if end > len(blob):
                raise ModelFormatError(f"{path}: truncated weight blob")
            p[key] = np.frombuffer(blob[offset:end], dtype="<f4").reshape(shape).astype(
                np.float32
            )
            offset = end
    if offset != len(blob):
        raise ModelFormatError(f"{path}: trailing bytes in weight blob")
    return net, header["meta"]
