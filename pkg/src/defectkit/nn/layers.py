"""Forward/backward primitives for all layer kinds.

Activations are batch-first numpy arrays: (N, H, W, C) for spatial
tensors, (N, D) for flat ones. Convolution weights are (kh, kw, cin_per_group,
cout); fully connected weights are (d_in, d_out). Every forward returns
(output, cache) and the matching backward consumes that cache.

Grouped convolution splits input and output channels into `groups`
independent blocks; output block g reads only input block g. Max pooling
treats padded cells as -inf so they are never selected. Dropout is the
inverted variant: surviving activations are scaled by 1/(1-rate) at train
time and inference is the identity.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeMismatchError

LRN_K = 2.0
LRN_ALPHA = 1e-4
LRN_BETA = 0.75


def _out_size(size: int, k: int, pad_a: int, pad_b: int, stride: int) -> int:
    padded = size + pad_a + pad_b
    if padded < k:
        raise ShapeMismatchError(f"window {k} exceeds padded extent {padded}")
    return (padded - k) // stride + 1


def conv2d_forward(x, w, b, stride=(1, 1), padding=(0, 0, 0, 0), groups=1):
    n, h, wd, cin = x.shape
    kh, kw, cin_g, cout = w.shape
    sy, sx = stride
    pt, pb, pl, pr = padding
    if cin % groups or cout % groups:
        raise ShapeMismatchError(f"groups={groups} must divide cin={cin} and cout={cout}")
    if cin_g != cin // groups:
        raise ShapeMismatchError(f"weight expects {cin_g} channels/group, input has {cin // groups}")
    if b.shape != (cout,):
        raise ShapeMismatchError(f"bias shape {b.shape} != ({cout},)")
    oh = _out_size(h, kh, pt, pb, sy)
    ow = _out_size(wd, kw, pl, pr, sx)

    xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::sy, ::sx]
    # (N, OH, OW, C, kh, kw) -> (N*OH*OW, kh, kw, C); flattening order matches
    # the (kh, kw, cin) weight layout.
    cols = np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3)).reshape(
        n * oh * ow, kh, kw, cin
    )

    cout_g = cout // groups
    y = np.empty((n * oh * ow, cout), dtype=x.dtype)
    for g in range(groups):
        cols_g = cols[:, :, :, g * cin_g:(g + 1) * cin_g].reshape(n * oh * ow, -1)
        w_g = w[:, :, :, g * cout_g:(g + 1) * cout_g].reshape(-1, cout_g)
        y[:, g * cout_g:(g + 1) * cout_g] = cols_g @ w_g
    y = y + b
    y = y.reshape(n, oh, ow, cout)
    cache = (x.shape, cols, w, stride, padding, groups, (oh, ow))
    return y, cache


def conv2d_backward(dy, cache):
    x_shape, cols, w, stride, padding, groups, (oh, ow) = cache
    n, h, wd, cin = x_shape
    kh, kw, cin_g, cout = w.shape
    sy, sx = stride
    pt, pb, pl, pr = padding
    cout_g = cout // groups

    dyf = dy.reshape(n * oh * ow, cout)
    db = dyf.sum(axis=0)
    dw = np.empty_like(w)
    dcols = np.empty_like(cols)
    for g in range(groups):
        cols_g = cols[:, :, :, g * cin_g:(g + 1) * cin_g].reshape(n * oh * ow, -1)
        dy_g = dyf[:, g * cout_g:(g + 1) * cout_g]
        dw[:, :, :, g * cout_g:(g + 1) * cout_g] = (cols_g.T @ dy_g).reshape(
            kh, kw, cin_g, cout_g
        )
        w_g = w[:, :, :, g * cout_g:(g + 1) * cout_g].reshape(-1, cout_g)
        dcols[:, :, :, g * cin_g:(g + 1) * cin_g] = (dy_g @ w_g.T).reshape(
            n * oh * ow, kh, kw, cin_g
        )

    dcols = dcols.reshape(n, oh, ow, kh, kw, cin)
    dxp = np.zeros((n, h + pt + pb, wd + pl + pr, cin), dtype=dy.dtype)
    for ky in range(kh):
        for kx in range(kw):
            dxp[:, ky:ky + sy * oh:sy, kx:kx + sx * ow:sx, :] += dcols[:, :, :, ky, kx, :]
    dx = dxp[:, pt:pt + h, pl:pl + wd, :]
    return dx, dw, db


def maxpool_forward(x, kernel=(3, 3), stride=(2, 2), padding=(0, 0, 0, 0)):
    n, h, w, c = x.shape
    kh, kw = kernel
    sy, sx = stride
    pt, pb, pl, pr = padding
    oh = _out_size(h, kh, pt, pb, sy)
    ow = _out_size(w, kw, pl, pr, sx)

    xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)), constant_values=-np.inf)
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::sy, ::sx]
    flat = win.reshape(n, oh, ow, c, kh * kw)
    idx = np.argmax(flat, axis=-1)  # first max wins on ties
    y = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
    cache = (x.shape, xp.shape, kernel, stride, padding, idx)
    return y, cache


def maxpool_backward(dy, cache):
    x_shape, xp_shape, (kh, kw), (sy, sx), (pt, pb, pl, pr), idx = cache
    n, h, w, c = x_shape
    _, oh, ow, _ = dy.shape
    dxp = np.zeros(xp_shape, dtype=dy.dtype)
    ky = idx // kw
    kx = idx % kw
    ni, ohi, owi, ci = np.ogrid[:n, :oh, :ow, :c]
    rows = ohi * sy + ky
    cols = owi * sx + kx
    np.add.at(dxp, (ni, rows, cols, ci), dy)
    return dxp[:, pt:pt + h, pl:pl + w, :]


def _windowed_channel_sum(t, window):
    """Sum over a channel window of `window` centered per channel, clipped to range."""
    r = window // 2
    c = t.shape[-1]
    cs = np.cumsum(t, axis=-1)
    cs = np.concatenate([np.zeros(t.shape[:-1] + (1,), dtype=t.dtype), cs], axis=-1)
    hi = np.minimum(np.arange(c) + r + 1, c)
    lo = np.maximum(np.arange(c) - r, 0)
    return cs[..., hi] - cs[..., lo]


def lrn_forward(x, window=5, k=LRN_K, alpha=LRN_ALPHA, beta=LRN_BETA):
    if window % 2 == 0:
        raise ShapeMismatchError("LRN window must be odd")
    ssum = _windowed_channel_sum(x * x, window)
    base = k + (alpha / window) * ssum
    scale = base ** (-beta)
    y = x * scale
    return y, (x, base, scale, window, alpha, beta)


def lrn_backward(dy, cache):
    x, base, scale, window, alpha, beta = cache
    inner = _windowed_channel_sum(dy * x * (scale / base), window)
    return dy * scale - (2.0 * alpha * beta / window) * x * inner


def relu_forward(x):
    return np.maximum(x, 0), (x > 0)


def relu_backward(dy, cache):
    return dy * cache


def sigmoid(x):
    """Numerically stable logistic function."""
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_forward(x):
    y = sigmoid(x)
    return y, y


def sigmoid_backward(dy, cache):
    y = cache
    return dy * y * (1.0 - y)


def dropout_forward(x, rate, rng=None, training=False):
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("dropout needs an rng in training mode")
    keep = (rng.random(x.shape) >= rate).astype(x.dtype)
    scale = x.dtype.type(1.0 / (1.0 - rate))
    return x * keep * scale, (keep, scale)


def dropout_backward(dy, cache):
    if cache is None:
        return dy
    keep, scale = cache
    return dy * keep * scale


def fc_forward(x, w, b):
    n = x.shape[0]
    x2 = x.reshape(n, -1)
    if x2.shape[1] != w.shape[0]:
        raise ShapeMismatchError(f"fc input dim {x2.shape[1]} != weight rows {w.shape[0]}")
    y = x2 @ w + b
    return y, (x.shape, x2, w)


def fc_backward(dy, cache):
    x_shape, x2, w = cache
    dw = x2.T @ dy
    db = dy.sum(axis=0)
    dx = (dy @ w.T).reshape(x_shape)
    return dx, dw, db


def softmax(z):
    zs = z - z.max(axis=-1, keepdims=True)
    e = np.exp(zs)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_forward(z):
    p = softmax(z)
    return p, p


def softmax_xent_loss(logits, labels):
    """Mean cross-entropy of softmax(logits) against integer labels.

    Returns (loss, dlogits) with dlogits already averaged over the batch.
    """
    n = logits.shape[0]
    zs = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(zs).sum(axis=1, keepdims=True))
    logp = zs - log_norm
    loss = float(-logp[np.arange(n), labels].mean())
    dlogits = np.exp(logp)
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def bce_with_logits_loss(logits, labels):
    """Mean binary cross-entropy of sigmoid(logits) against 0/1 labels.

    Computed from logits for stability. Returns (loss, dlogits) with the
    gradient averaged over the batch.
    """
    z = logits.reshape(-1)
    y = labels.astype(z.dtype)
    loss = float(np.mean(np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))))
    dz = (sigmoid(z) - y) / z.shape[0]
    return loss, dz.reshape(logits.shape)
