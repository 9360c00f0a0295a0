import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from defectkit.errors import (
    ChannelMismatchError,
    InvalidDimensionError,
    InvalidThresholdError,
)
from defectkit.imagecore import CannyParams, canny, resize, to_grayscale

from reference_canny import canny_reference


def rgb(value, h=4, w=4):
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[:, :] = value
    return img


class TestGrayscale:
    def test_white_stays_white(self):
        assert (to_grayscale(rgb((255, 255, 255))) == 255).all()

    def test_black_stays_black(self):
        assert (to_grayscale(rgb((0, 0, 0))) == 0).all()

    def test_pure_red(self):
        # round(0.2989 * 255) = round(76.2195)
        assert (to_grayscale(rgb((255, 0, 0))) == 76).all()

    def test_rejects_single_channel(self):
        with pytest.raises(ChannelMismatchError):
            to_grayscale(np.zeros((4, 4), dtype=np.uint8))

    @given(st.integers(0, 255))
    def test_idempotent_through_channel_replication(self, g):
        gray = np.full((3, 5), g, dtype=np.uint8)
        replicated = np.repeat(gray[:, :, None], 3, axis=2)
        assert (to_grayscale(replicated) == gray).all()


class TestResize:
    def test_identity(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, (50, 50), dtype=np.uint8)
        assert (resize(img, 50, 50) == img).all()

    def test_constant_stays_constant(self):
        img = np.full((400, 400, 3), 37, dtype=np.uint8)
        out = resize(img, 50, 50)
        assert out.shape == (50, 50, 3)
        assert (out == 37).all()

    def test_checkerboard_center_sample(self):
        # single center sample of [[0,255],[255,0]] is 127.5, round-half-up 128
        img = np.array([[0, 255], [255, 0]], dtype=np.uint8)
        assert resize(img, 1, 1)[0, 0] == 128

    def test_rejects_zero_dimension(self):
        img = np.zeros((4, 4), dtype=np.uint8)
        with pytest.raises(InvalidDimensionError):
            resize(img, 0, 4)

    def test_matches_scalar_bilinear_oracle(self):
        rng = np.random.default_rng(7)
        img = rng.integers(0, 256, (7, 5), dtype=np.uint8)
        out = resize(img, 3, 4)
        h, w = img.shape
        for dy in range(3):
            for dx in range(4):
                sy = min(max((dy + 0.5) * (h / 3) - 0.5, 0.0), h - 1.0)
                sx = min(max((dx + 0.5) * (w / 4) - 0.5, 0.0), w - 1.0)
                y0, x0 = int(np.floor(sy)), int(np.floor(sx))
                y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
                fy, fx = sy - y0, sx - x0
                acc = (1 - fy) * (1 - fx) * float(img[y0, x0])
                acc = acc + (1 - fy) * fx * float(img[y0, x1])
                acc = acc + fy * (1 - fx) * float(img[y1, x0])
                acc = acc + fy * fx * float(img[y1, x1])
                assert out[dy, dx] == int(np.floor(acc + 0.5))

    @given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 17), st.integers(1, 17))
    @settings(max_examples=30, deadline=None)
    def test_output_dimensions(self, h, w, oh, ow):
        img = np.zeros((h, w), dtype=np.uint8)
        assert resize(img, oh, ow).shape == (oh, ow)


class TestCannyParams:
    def test_rejects_inverted_thresholds(self):
        with pytest.raises(InvalidThresholdError):
            CannyParams(low=0.9, high=0.5)

    def test_rejects_equal_thresholds(self):
        with pytest.raises(InvalidThresholdError):
            CannyParams(low=0.5, high=0.5)

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(InvalidThresholdError):
            CannyParams(sigma=0.0)


class TestCanny:
    def test_constant_image_is_all_zero(self):
        img = np.full((50, 50), 93, dtype=np.uint8)
        assert (canny(img, CannyParams()) == 0).all()

    def test_rejects_rgb(self):
        with pytest.raises(ChannelMismatchError):
            canny(np.zeros((8, 8, 3), dtype=np.uint8), CannyParams())

    def test_output_is_binary(self):
        rng = np.random.default_rng(3)
        img = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        out = canny(img, CannyParams(low=0.2, high=0.6, sigma=1.0))
        assert set(np.unique(out)) <= {0, 255}

    def test_vertical_step_edges_hug_the_step(self):
        img = np.zeros((10, 10), dtype=np.uint8)
        img[:, 5:] = 255
        out = canny(img, CannyParams(low=0.2, high=0.5, sigma=1.0))
        ref = np.array(canny_reference(img.tolist(), 0.2, 0.5, 1.0), dtype=np.uint8)
        assert (out == ref).all()
        edge_cols = set(np.nonzero(out)[1].tolist())
        assert edge_cols and edge_cols <= {4, 5}
        assert (out.max(axis=1) == 255).all()  # the edge runs the full height

    def test_matches_naive_reference_on_random_images(self):
        rng = np.random.default_rng(11)
        for seed in range(10):
            img = rng.integers(0, 256, (24, 24), dtype=np.uint8)
            params = CannyParams(low=0.3, high=0.7, sigma=1.2)
            out = canny(img, params)
            ref = np.array(canny_reference(img.tolist(), 0.3, 0.7, 1.2), dtype=np.uint8)
            assert (out == ref).all(), f"mismatch at case {seed}"

    def test_raising_low_never_adds_edges(self):
        rng = np.random.default_rng(5)
        img = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        wide = canny(img, CannyParams(low=0.1, high=0.8, sigma=1.0)) > 0
        narrow = canny(img, CannyParams(low=0.4, high=0.8, sigma=1.0)) > 0
        assert not (narrow & ~wide).any()

    def test_raising_high_never_adds_edges(self):
        rng = np.random.default_rng(6)
        img = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        lo_high = canny(img, CannyParams(low=0.1, high=0.5, sigma=1.0)) > 0
        hi_high = canny(img, CannyParams(low=0.1, high=0.9, sigma=1.0)) > 0
        assert not (hi_high & ~lo_high).any()
