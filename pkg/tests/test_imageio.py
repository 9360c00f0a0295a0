import numpy as np
import pytest
from PIL import Image as PILImage

from defectkit.errors import UnreadableImageError, UnsupportedImageError
from defectkit.imageio import read_image, write_image


@pytest.fixture
def gray_img():
    rng = np.random.default_rng(1)
    return rng.integers(0, 256, (13, 9), dtype=np.uint8)


@pytest.fixture
def rgb_img():
    rng = np.random.default_rng(2)
    return rng.integers(0, 256, (6, 11, 3), dtype=np.uint8)


@pytest.mark.parametrize("ext", ["png", "pgm"])
def test_gray_roundtrip(tmp_path, gray_img, ext):
    path = tmp_path / f"img.{ext}"
    write_image(path, gray_img)
    assert (read_image(path) == gray_img).all()


@pytest.mark.parametrize("ext", ["png", "ppm"])
def test_rgb_roundtrip(tmp_path, rgb_img, ext):
    path = tmp_path / f"img.{ext}"
    write_image(path, rgb_img)
    assert (read_image(path) == rgb_img).all()


def test_rejects_16bit_png(tmp_path):
    path = tmp_path / "deep.png"
    PILImage.fromarray(np.zeros((4, 4), dtype=np.uint16) + 300).save(path)
    with pytest.raises(UnsupportedImageError):
        read_image(path)


def test_rejects_16bit_pgm(tmp_path):
    path = tmp_path / "deep.pgm"
    path.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
    with pytest.raises(UnsupportedImageError):
        read_image(path)


def test_rejects_ascii_pgm(tmp_path):
    path = tmp_path / "ascii.pgm"
    path.write_bytes(b"P2\n2 2\n255\n0 1 2 3\n")
    with pytest.raises(UnsupportedImageError):
        read_image(path)


def test_corrupt_png_raises_unreadable(tmp_path):
    path = tmp_path / "bad.png"
    path.write_bytes(b"\x89PNG\r\n\x1a\nnot really a png at all")
    with pytest.raises(UnreadableImageError):
        read_image(path)


def test_truncated_pgm_raises_unreadable(tmp_path):
    path = tmp_path / "short.pgm"
    path.write_bytes(b"P5\n4 4\n255\n" + bytes(3))
    with pytest.raises(UnreadableImageError):
        read_image(path)


def test_pgm_comment_handling(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment line\n2 2\n255\n" + bytes([1, 2, 3, 4]))
    assert (read_image(path) == np.array([[1, 2], [3, 4]], dtype=np.uint8)).all()


def test_pgm_rejects_rgb_array(tmp_path, rgb_img):
    with pytest.raises(UnsupportedImageError):
        write_image(tmp_path / "x.pgm", rgb_img)


def test_unknown_extension(tmp_path, gray_img):
    with pytest.raises(UnsupportedImageError):
        write_image(tmp_path / "x.tiff", gray_img)


def test_png_write_is_deterministic(tmp_path, rgb_img):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    write_image(a, rgb_img)
    write_image(b, rgb_img)
    assert a.read_bytes() == b.read_bytes()
