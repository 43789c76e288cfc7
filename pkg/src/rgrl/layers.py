"""Layers with hand-written reverse-mode gradients.

Dense layers act on column-per-sample matrices ``(features, n)``. Convolutional
layers act on ``(n, height, width, channels)`` arrays. Every layer caches what
its backward pass needs during ``forward`` and fills ``grads`` in ``backward``.
"""

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = ["Dense", "ReLU", "Conv2d", "ConvTranspose2d", "same_padding", "conv_output_size"]


def glorot_uniform(rng, shape, fan_in, fan_out):
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


class Dense:
    """``y = W @ x + b`` for column-per-sample ``x``."""

    def __init__(self, n_in, n_out, rng):
        self.params = {
            "W": glorot_uniform(rng, (n_out, n_in), n_in, n_out),
            "b": np.zeros(n_out),
        }
        self.grads = {}

    def forward(self, x):
        self._x = x
        return self.params["W"] @ x + self.params["b"][:, None]

    def backward(self, gy):
        self.grads = {"W": gy @ self._x.T, "b": gy.sum(axis=1)}
        return self.params["W"].T @ gy


class ReLU:
    params = {}

    def __init__(self):
        self.grads = {}

    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, gy):
        return np.where(self._mask, gy, 0.0)


def conv_output_size(size, stride):
    return -(-size // stride)


def same_padding(size, kernel, stride):
    """``(before, after)`` padding that gives ``ceil(size / stride)`` outputs."""
    out = conv_output_size(size, stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return total // 2, total - total // 2


def _pad_spec(in_hw, kernel, stride):
    return (same_padding(in_hw[0], kernel[0], stride), same_padding(in_hw[1], kernel[1], stride))


def _conv_forward(x, W, stride):
    # x: (n, h, w, cin); W: (kh, kw, cin, cout)
    kh, kw = W.shape[:2]
    (pt, pb), (pl, pr) = _pad_spec(x.shape[1:3], (kh, kw), stride)
    xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    # win: (n, oh, ow, cin, kh, kw)
    return np.einsum("nhwcij,ijco->nhwo", win, W, optimize=True)


def _conv_input_grad(gy, W, in_shape, stride):
    # adjoint of _conv_forward with respect to x
    kh, kw = W.shape[:2]
    n, h, w, cin = in_shape
    (pt, pb), (pl, pr) = _pad_spec((h, w), (kh, kw), stride)
    oh, ow = gy.shape[1:3]
    gxp = np.zeros((n, h + pt + pb, w + pl + pr, cin))
    cols = np.einsum("nhwo,ijco->nhwijc", gy, W, optimize=True)
    for i in range(kh):
        for j in range(kw):
            gxp[:, i:i + stride * oh:stride, j:j + stride * ow:stride, :] += cols[:, :, :, i, j, :]
    return gxp[:, pt:pt + h, pl:pl + w, :]


def _conv_weight_grad(x, gy, kernel, stride):
    kh, kw = kernel
    (pt, pb), (pl, pr) = _pad_spec(x.shape[1:3], (kh, kw), stride)
    xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    return np.einsum("nhwcij,nhwo->ijco", win, gy, optimize=True)


class Conv2d:
    """Strided convolution with TensorFlow-style ``same`` padding.

    Maps ``(n, h, w, c_in)`` to ``(n, ceil(h/s), ceil(w/s), c_out)``.
    """

    def __init__(self, c_in, c_out, kernel, stride, rng):
        kh, kw = kernel
        self.stride = stride
        self.params = {
            "W": glorot_uniform(rng, (kh, kw, c_in, c_out), kh * kw * c_in, kh * kw * c_out),
            "b": np.zeros(c_out),
        }
        self.grads = {}

    def forward(self, x):
        self._x = x
        return _conv_forward(x, self.params["W"], self.stride) + self.params["b"]

    def backward(self, gy):
        W = self.params["W"]
        self.grads = {
            "W": _conv_weight_grad(self._x, gy, W.shape[:2], self.stride),
            "b": gy.sum(axis=(0, 1, 2)),
        }
        return _conv_input_grad(gy, W, self._x.shape, self.stride)


class ConvTranspose2d:
    """Transposed convolution: the exact adjoint of :class:`Conv2d`.

    ``out_hw`` fixes the output spatial size, which the stride alone leaves
    ambiguous; the decoder passes the matching encoder input size.
    The weight has shape ``(kh, kw, c_out, c_in)`` so that it lines up with
    the mirrored encoder layer.
    """

    def __init__(self, c_in, c_out, kernel, stride, out_hw, rng):
        kh, kw = kernel
        self.stride = stride
        self.out_hw = tuple(out_hw)
        self.params = {
            "W": glorot_uniform(rng, (kh, kw, c_out, c_in), kh * kw * c_in, kh * kw * c_out),
            "b": np.zeros(c_out),
        }
        self.grads = {}

    def forward(self, x):
        self._x = x
        W = self.params["W"]
        shape = (x.shape[0], *self.out_hw, W.shape[2])
        return _conv_input_grad(x, W, shape, self.stride) + self.params["b"]

    def backward(self, gy):
        W = self.params["W"]
        self.grads = {
            # forward conv of gy produces the input-shaped map; roles swap
            "W": _conv_weight_grad(gy, self._x, W.shape[:2], self.stride),
            "b": gy.sum(axis=(0, 1, 2)),
        }
        return _conv_forward(gy, W, self.stride)
