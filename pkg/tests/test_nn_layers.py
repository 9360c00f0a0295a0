import numpy as np
import pytest

from defectkit.errors import ShapeMismatchError
from defectkit.nn import layers as L

H = 1e-5
REL_TOL = 1e-4


def numeric_grad(f, x, h=H):
    """Central finite differences of scalar f() w.r.t. array x (mutated in place)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        orig = x[i]
        x[i] = orig + h
        fp = f()
        x[i] = orig - h
        fm = f()
        x[i] = orig
        g[i] = (fp - fm) / (2.0 * h)
    return g


def rel_error(analytic, numeric):
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-6)
    return float(np.max(np.abs(analytic - numeric) / denom))


def direct_conv(x, w, b, stride, padding, groups):
    """Brute-force convolution oracle: plain loops, no im2col."""
    n, h, wd, cin = x.shape
    kh, kw, cin_g, cout = w.shape
    sy, sx = stride
    pt, pb, pl, pr = padding
    oh = (h + pt + pb - kh) // sy + 1
    ow = (wd + pl + pr - kw) // sx + 1
    cout_g = cout // groups
    xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    y = np.zeros((n, oh, ow, cout))
    for ni in range(n):
        for oy in range(oh):
            for ox in range(ow):
                for co in range(cout):
                    g = co // cout_g
                    acc = 0.0
                    for ky in range(kh):
                        for kx in range(kw):
                            for ci in range(cin_g):
                                acc += (
                                    xp[ni, oy * sy + ky, ox * sx + kx, g * cin_g + ci]
                                    * w[ky, kx, ci, co]
                                )
                    y[ni, oy, ox, co] = acc + b[co]
    return y


class TestConvForward:
    def test_identity_1x1_kernel(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((2, 5, 5, 1))
        w = np.ones((1, 1, 1, 1))
        b = np.zeros(1)
        y, _ = L.conv2d_forward(x, w, b)
        assert np.allclose(y, x)

    @pytest.mark.parametrize("groups,cin,cout", [(1, 3, 4), (2, 4, 6)])
    def test_matches_direct_oracle(self, groups, cin, cout):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((2, 6, 6, cin))
        w = rng.standard_normal((3, 3, cin // groups, cout))
        b = rng.standard_normal(cout)
        y, _ = L.conv2d_forward(x, w, b, stride=(2, 1), padding=(1, 0, 1, 2), groups=groups)
        ref = direct_conv(x, w, b, (2, 1), (1, 0, 1, 2), groups)
        assert np.allclose(y, ref, atol=1e-10)

    def test_groups2_equals_stacked_half_convolutions(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((3, 5, 5, 8))
        w = rng.standard_normal((3, 3, 4, 10))
        b = rng.standard_normal(10)
        y, _ = L.conv2d_forward(x, w, b, padding=(1, 1, 1, 1), groups=2)
        y0, _ = L.conv2d_forward(x[..., :4], w[..., :5], b[:5], padding=(1, 1, 1, 1))
        y1, _ = L.conv2d_forward(x[..., 4:], w[..., 5:], b[5:], padding=(1, 1, 1, 1))
        assert np.allclose(y, np.concatenate([y0, y1], axis=-1), atol=1e-12)

    def test_rejects_indivisible_groups(self):
        x = np.zeros((1, 4, 4, 3))
        w = np.zeros((3, 3, 1, 4))
        with pytest.raises(ShapeMismatchError):
            L.conv2d_forward(x, w, np.zeros(4), groups=2)

    def test_rejects_oversized_kernel(self):
        x = np.zeros((1, 2, 2, 1))
        w = np.zeros((3, 3, 1, 1))
        with pytest.raises(ShapeMismatchError):
            L.conv2d_forward(x, w, np.zeros(1))


class TestMaxPool:
    def test_constant_input_stays_constant(self):
        x = np.full((1, 35, 35, 4), 2.5)
        y, _ = L.maxpool_forward(x, kernel=(3, 3), stride=(2, 2))
        assert y.shape == (1, 17, 17, 4)
        assert (y == 2.5).all()

    def test_matches_brute_force(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((2, 7, 6, 3))
        y, _ = L.maxpool_forward(x, kernel=(3, 3), stride=(2, 2), padding=(2, 2, 2, 2))
        pt = pb = pl = pr = 2
        xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)), constant_values=-np.inf)
        n, oh, ow, c = y.shape
        for ni in range(n):
            for oy in range(oh):
                for ox in range(ow):
                    for ci in range(c):
                        win = xp[ni, oy * 2:oy * 2 + 3, ox * 2:ox * 2 + 3, ci]
                        assert y[ni, oy, ox, ci] == win.max()


class TestGradients:
    """Analytic vs central-difference gradients, double precision, h=1e-5."""

    def test_conv_gradients(self):
        rng = np.random.default_rng(10)
        for trial in range(20):
            groups = 2 if trial % 2 else 1
            cin, cout = (4, 6) if groups == 2 else (3, 4)
            x = rng.standard_normal((2, 6, 6, cin))
            w = rng.standard_normal((3, 3, cin // groups, cout))
            b = rng.standard_normal(cout)
            r = rng.standard_normal((2, 3, 6, cout))
            args = dict(stride=(2, 1), padding=(1, 0, 1, 1), groups=groups)

            y, cache = L.conv2d_forward(x, w, b, **args)
            dx, dw, db = L.conv2d_backward(r, cache)
            f = lambda: float(np.sum(L.conv2d_forward(x, w, b, **args)[0] * r))
            assert rel_error(dx, numeric_grad(f, x)) < REL_TOL
            assert rel_error(dw, numeric_grad(f, w)) < REL_TOL
            assert rel_error(db, numeric_grad(f, b)) < REL_TOL

    def test_maxpool_gradient(self):
        rng = np.random.default_rng(11)
        checked = 0
        seed = 0
        while checked < 20:
            seed += 1
            local = np.random.default_rng(seed)
            x = local.standard_normal((2, 6, 6, 3))
            y, cache = L.maxpool_forward(x, kernel=(3, 3), stride=(2, 2), padding=(1, 1, 1, 1))
            # finite differences are only valid away from argmax ties
            flat = L.maxpool_forward(x, (3, 3), (2, 2), (1, 1, 1, 1))[0]
            win = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)), constant_values=-np.inf)
            gaps_ok = True
            n, oh, ow, c = y.shape
            for ni in range(n):
                for oy in range(oh):
                    for ox in range(ow):
                        for ci in range(c):
                            vals = np.sort(win[ni, oy*2:oy*2+3, ox*2:ox*2+3, ci].ravel())
                            if vals[-1] - vals[-2] < 10 * H:
                                gaps_ok = False
            if not gaps_ok:
                continue
            r = rng.standard_normal(y.shape)
            dx = L.maxpool_backward(r, cache)
            f = lambda: float(
                np.sum(L.maxpool_forward(x, (3, 3), (2, 2), (1, 1, 1, 1))[0] * r)
            )
            assert rel_error(dx, numeric_grad(f, x)) < REL_TOL
            checked += 1

    def test_lrn_gradient(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            x = rng.standard_normal((2, 3, 3, 7))
            y, cache = L.lrn_forward(x, window=5)
            r = rng.standard_normal(y.shape)
            dx = L.lrn_backward(r, cache)
            f = lambda: float(np.sum(L.lrn_forward(x, window=5)[0] * r))
            assert rel_error(dx, numeric_grad(f, x)) < REL_TOL

    def test_relu_gradient(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            x = rng.standard_normal((4, 6, 6, 3))
            x[np.abs(x) < 1e-3] = 0.5  # keep away from the kink
            y, cache = L.relu_forward(x)
            r = rng.standard_normal(y.shape)
            dx = L.relu_backward(r, cache)
            f = lambda: float(np.sum(L.relu_forward(x)[0] * r))
            assert rel_error(dx, numeric_grad(f, x)) < REL_TOL

    def test_sigmoid_gradient(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            x = rng.standard_normal((5, 8))
            y, cache = L.sigmoid_forward(x)
            r = rng.standard_normal(y.shape)
            dx = L.sigmoid_backward(r, cache)
            f = lambda: float(np.sum(L.sigmoid_forward(x)[0] * r))
            assert rel_error(dx, numeric_grad(f, x)) < REL_TOL

    def test_fc_gradients(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            x = rng.standard_normal((4, 3, 2, 2))
            w = rng.standard_normal((12, 5))
            b = rng.standard_normal(5)
            y, cache = L.fc_forward(x, w, b)
            r = rng.standard_normal(y.shape)
            dx, dw, db = L.fc_backward(r, cache)
            f = lambda: float(np.sum(L.fc_forward(x, w, b)[0] * r))
            assert rel_error(dx, numeric_grad(f, x)) < REL_TOL
            assert rel_error(dw, numeric_grad(f, w)) < REL_TOL
            assert rel_error(db, numeric_grad(f, b)) < REL_TOL

    def test_dropout_gradient_with_pinned_mask(self):
        rng = np.random.default_rng(16)
        for trial in range(20):
            x = rng.standard_normal((4, 10))
            r = rng.standard_normal(x.shape)

            def run():
                pinned = np.random.Generator(np.random.PCG64(trial))
                return L.dropout_forward(x, 0.5, pinned, training=True)

            y, cache = run()
            dx = L.dropout_backward(r, cache)
            f = lambda: float(np.sum(run()[0] * r))
            assert rel_error(dx, numeric_grad(f, x)) < REL_TOL

    def test_softmax_xent_gradient(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            logits = rng.standard_normal((6, 2))
            labels = rng.integers(0, 2, 6)
            loss, dlogits = L.softmax_xent_loss(logits, labels)
            f = lambda: L.softmax_xent_loss(logits, labels)[0]
            assert rel_error(dlogits, numeric_grad(f, logits)) < REL_TOL

    def test_bce_with_logits_gradient(self):
        rng = np.random.default_rng(18)
        for _ in range(20):
            logits = rng.standard_normal((7, 1))
            labels = rng.integers(0, 2, 7)
            loss, dlogits = L.bce_with_logits_loss(logits, labels)
            f = lambda: L.bce_with_logits_loss(logits, labels)[0]
            assert rel_error(dlogits, numeric_grad(f, logits)) < REL_TOL


class TestElementwiseBasics:
    def test_relu_values(self):
        y, _ = L.relu_forward(np.array([-3.0, 5.0]))
        assert (y == [0.0, 5.0]).all()

    def test_dropout_rate_zero_is_identity(self):
        x = np.arange(6.0).reshape(2, 3)
        rng = np.random.default_rng(0)
        for training in (False, True):
            y, _ = L.dropout_forward(x, 0.0, rng, training=training)
            assert (y == x).all()

    def test_dropout_inference_is_identity(self):
        x = np.arange(6.0).reshape(2, 3)
        y, _ = L.dropout_forward(x, 0.9, None, training=False)
        assert (y == x).all()

    def test_dropout_expectation_matches_inference(self):
        # inverted dropout: E[train output] == inference output within 1%
        x = np.full((1, 64), 2.0)
        rng = np.random.default_rng(42)
        total = np.zeros_like(x)
        draws = 10_000
        for _ in range(draws):
            y, _ = L.dropout_forward(x, 0.5, rng, training=True)
            total += y
        assert np.abs(total / draws - x).max() < 0.01 * 2.0 * 4  # 4 sigma margin

    def test_softmax_symmetry(self):
        p = L.softmax(np.array([[0.0, 0.0]]))
        assert np.allclose(p, [[0.5, 0.5]])

    def test_softmax_positive_and_normalized(self):
        rng = np.random.default_rng(19)
        z = rng.standard_normal((100, 2)) * 50
        p = L.softmax(z)
        assert (p > 0).all()
        assert np.abs(p.sum(axis=1) - 1.0).max() < 1e-6

    def test_lrn_scalar_formula(self):
        # single nonzero channel v: v / (2 + (1e-4/5) v^2)^0.75
        x = np.zeros((1, 1, 1, 5))
        x[0, 0, 0, 2] = 3.0
        y, _ = L.lrn_forward(x, window=5)
        expected = 3.0 / (2.0 + (1e-4 / 5.0) * 9.0) ** 0.75
        assert y[0, 0, 0, 2] == pytest.approx(expected, rel=1e-12)
        assert y[0, 0, 0, 0] == 0.0

    def test_lrn_zero_input(self):
        y, _ = L.lrn_forward(np.zeros((1, 2, 2, 5)), window=5)
        assert (y == 0).all()

    def test_lrn_preserves_shape(self):
        y, _ = L.lrn_forward(np.zeros((1, 35, 35, 96)), window=5)
        assert y.shape == (1, 35, 35, 96)
