"""8-bit image file IO: PNG plus binary PGM (P5) and PPM (P6).

Loaders reject anything that is not 8 bits per sample. PNG decoding is
delegated to Pillow; the netpbm formats are parsed directly since their
headers carry the maxval we must check.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from .errors import UnreadableImageError, UnsupportedImageError
from .imagecore import ensure_image

_PNG_OK_MODES = {"L", "RGB", "P"}


def read_image(path: str | Path) -> np.ndarray:
    """Read an 8-bit grayscale or RGB image as a uint8 array."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".ppm"):
        return _read_netpbm(path)
    if suffix == ".png":
        return _read_png(path)
    raise UnsupportedImageError(f"unsupported image extension: {path}")


def write_image(path: str | Path, img: np.ndarray) -> None:
    """Write a uint8 image; the extension picks the format."""
    ensure_image(img)
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        PILImage.fromarray(img).save(path, format="PNG")
    elif suffix == ".pgm":
        if img.ndim != 2:
            raise UnsupportedImageError("PGM holds single-channel images only")
        _write_netpbm(path, img, magic=b"P5")
    elif suffix == ".ppm":
        if img.ndim != 3 or img.shape[2] != 3:
            raise UnsupportedImageError("PPM holds 3-channel images only")
        _write_netpbm(path, img, magic=b"P6")
    else:
        raise UnsupportedImageError(f"unsupported image extension: {path}")


def _read_png(path: Path) -> np.ndarray:
    try:
        with PILImage.open(path) as im:
            im.load()
            mode = im.mode
            if mode not in _PNG_OK_MODES:
                raise UnsupportedImageError(
                    f"{path}: only 8-bit grayscale/RGB PNG supported, got mode {mode}"
                )
            if mode == "P":
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except FileNotFoundError:
        raise
    except UnsupportedImageError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise UnreadableImageError(f"cannot decode image {path}: {exc}") from exc
    return arr


def _read_netpbm(path: Path) -> np.ndarray:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise UnreadableImageError(f"cannot read {path}: {exc}") from exc
    try:
        return _parse_netpbm(raw)
    except UnsupportedImageError:
        raise
    except Exception as exc:
        raise UnreadableImageError(f"cannot decode image {path}: {exc}") from exc


def _parse_netpbm(raw: bytes) -> np.ndarray:
    buf = io.BytesIO(raw)
    magic = buf.read(2)
    if magic not in (b"P5", b"P6"):
        raise UnsupportedImageError(f"not a binary PGM/PPM file (magic {magic!r})")
    width = _read_netpbm_token(buf)
    height = _read_netpbm_token(buf)
    maxval = _read_netpbm_token(buf)
    if maxval != 255:
        raise UnsupportedImageError(f"only 8-bit netpbm supported, maxval={maxval}")
    nchan = 1 if magic == b"P5" else 3
    count = width * height * nchan
    data = buf.read(count)
    if len(data) != count:
        raise ValueError("truncated pixel data")
    arr = np.frombuffer(data, dtype=np.uint8)
    return arr.reshape((height, width) if nchan == 1 else (height, width, 3)).copy()


def _read_netpbm_token(buf: io.BytesIO) -> int:
    """Read the next whitespace-delimited integer, skipping # comments."""
    token = b""
    while True:
        ch = buf.read(1)
        if ch == b"":
            raise ValueError("unexpected end of header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = buf.read(1)
            continue
        if ch.isspace():
            if token:
                break
            continue
        token += ch
    return int(token)


def _write_netpbm(path: Path, img: np.ndarray, magic: bytes) -> None:
    h, w = img.shape[:2]
    header = magic + f"\n{w} {h}\n255\n".encode("ascii")
    path.write_bytes(header + np.ascontiguousarray(img).tobytes())
