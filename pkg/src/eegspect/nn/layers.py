"""Layers with exact analytic forward/backward passes, float64 throughout.

Each layer caches what its backward pass needs during forward; backward
consumes the cache and leaves gradients on the layer (dw, db, dgamma, ...).
Convolution is im2col plus one matmul per batch; pooling resolves ties by
first maximum, which keeps gradient routing deterministic.
"""

from __future__ import annotations

import math

import numpy as np


class Conv3x3:
    """3x3 convolution, stride 1, padding 1 (shape-preserving)."""

    def __init__(self, in_ch: int, out_ch: int, rng: np.random.Generator):
        fan_in = in_ch * 9
        bound = math.sqrt(6.0 / fan_in)
        self.w = rng.uniform(-bound, bound, size=(out_ch, in_ch * 9))
        self.b = np.zeros(out_ch)
        self._cols = None
        self._xshape = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, _, h, w = x.shape
        cols = _im2col3(x)
        out = np.matmul(self.w, cols) + self.b[:, None]
        self._cols = cols
        self._xshape = x.shape
        return out.reshape(b, self.w.shape[0], h, w)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        b, oc, h, w = dy.shape
        dyf = dy.reshape(b, oc, h * w)
        self.dw = np.einsum("bof,bcf->oc", dyf, self._cols)
        self.db = dyf.sum(axis=(0, 2))
        dcols = np.matmul(self.w.T, dyf)
        return _col2im3(dcols, self._xshape)


class BatchNorm2d:
    """Per-channel batch normalization with running statistics.

    Train mode normalizes with biased batch variance and updates the running
    estimates (unbiased variance, momentum 0.1); eval mode uses the running
    estimates and is independent of batch composition.
    """

    EPS = 1e-5
    MOMENTUM = 0.1

    def __init__(self, ch: int):
        self.gamma = np.ones(ch)
        self.beta = np.zeros(ch)
        self.running_mean = np.zeros(ch)
        self.running_var = np.ones(ch)
        self._cache = None

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        if train:
            mu = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            n = x.shape[0] * x.shape[2] * x.shape[3]
            self.running_mean = (1.0 - self.MOMENTUM) * self.running_mean + self.MOMENTUM * mu
            unbiased = var * (n / (n - 1.0)) if n > 1 else var
            self.running_var = (1.0 - self.MOMENTUM) * self.running_var + self.MOMENTUM * unbiased
        else:
            mu = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.EPS)
        xhat = (x - mu[None, :, None, None]) * inv_std[None, :, None, None]
        self._cache = (xhat, inv_std, x.shape, train)
        return self.gamma[None, :, None, None] * xhat + self.beta[None, :, None, None]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        xhat, inv_std, shape, train = self._cache
        if not train:
            raise RuntimeError("backward through eval-mode batch norm is unsupported")
        n = shape[0] * shape[2] * shape[3]
        self.dgamma = (dy * xhat).sum(axis=(0, 2, 3))
        self.dbeta = dy.sum(axis=(0, 2, 3))
        dxhat = dy * self.gamma[None, :, None, None]
        # Gradient through the batch statistics themselves:
        # dx = inv_std/n * (n*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
        sum_dxhat = dxhat.sum(axis=(0, 2, 3), keepdims=True)
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
        return (inv_std[None, :, None, None] / n) * (
            n * dxhat - sum_dxhat - xhat * sum_dxhat_xhat
        )


class ReLU:
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0.0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return np.where(self._mask, dy, 0.0)


class MaxPool2x2:
    """2x2 max pooling, stride 2. Ties route to the first maximum."""

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        grouped = (
            x.reshape(b, c, h // 2, 2, w // 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(b, c, h // 2, w // 2, 4)
        )
        self._argmax = grouped.argmax(axis=-1)
        self._xshape = x.shape
        return np.take_along_axis(grouped, self._argmax[..., None], axis=-1)[..., 0]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        b, c, h, w = self._xshape
        grouped = np.zeros((b, c, h // 2, w // 2, 4))
        np.put_along_axis(grouped, self._argmax[..., None], dy[..., None], axis=-1)
        return (
            grouped.reshape(b, c, h // 2, w // 2, 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(b, c, h, w)
        )


class Flatten:
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._xshape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy.reshape(self._xshape)


class Linear:
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        bound = math.sqrt(6.0 / in_features)
        self.w = rng.uniform(-bound, bound, size=(out_features, in_features))
        self.b = np.zeros(out_features)
        self._x = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.w.T + self.b

    def backward(self, dy: np.ndarray) -> np.ndarray:
        self.dw = dy.T @ self._x
        self.db = dy.sum(axis=0)
        return dy @ self.w


def _im2col3(x: np.ndarray) -> np.ndarray:
    """(B, C, H, W) -> (B, C*9, H*W) patch matrix for a padded 3x3 kernel."""
    b, c, h, w = x.shape
    padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3), axis=(2, 3))
    return windows.transpose(0, 1, 4, 5, 2, 3).reshape(b, c * 9, h * w)


def _col2im3(dcols: np.ndarray, xshape) -> np.ndarray:
    """Adjoint of _im2col3: scatter-add patch gradients back onto the input."""
    b, c, h, w = xshape
    d = dcols.reshape(b, c, 3, 3, h, w)
    dpad = np.zeros((b, c, h + 2, w + 2))
    for i in range(3):
        for j in range(3):
            dpad[:, :, i : i + h, j : j + w] += d[:, :, i, j]
    return dpad[:, :, 1 : h + 1, 1 : w + 1]
