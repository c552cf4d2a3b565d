"""Building blocks: same-padding 1-D convolution and batch normalization.

Arrays are (batch, channels, length), C-contiguous. Forward passes in
training mode cache what their backward passes need; backward passes fill
``d<param>`` attributes and return the gradient w.r.t. their input.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeMismatch


class ConvLayer:
    """1-D convolution, stride 1, zero-padded to preserve length.

    Padding splits as floor((K-1)/2) left and ceil((K-1)/2) right, so even
    kernels lean one extra zero to the right.
    """

    def __init__(self, in_ch: int, out_ch: int, kernel: int, rng: np.random.Generator, dtype=np.float32):
        limit = np.sqrt(6.0 / (in_ch * kernel))
        self.w = rng.uniform(-limit, limit, size=(out_ch, in_ch, kernel)).astype(dtype)
        self.b = np.zeros(out_ch, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._cache = None

    @property
    def kernel(self) -> int:
        return self.w.shape[2]

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        out_ch, in_ch, k = self.w.shape
        if x.ndim != 3 or x.shape[1] != in_ch:
            raise ShapeMismatch(f"conv expects (B, {in_ch}, L), got {x.shape}")
        batch, _, length = x.shape
        pad_l = (k - 1) // 2
        pad_r = k - 1 - pad_l
        xp = np.pad(x, ((0, 0), (0, 0), (pad_l, pad_r)))
        # im2col: rows are (b, t) positions, columns are (c, k) taps.
        cols = sliding_window_view(xp, k, axis=2)  # (B, C, L, K)
        cols = np.ascontiguousarray(cols.transpose(0, 2, 1, 3)).reshape(batch * length, in_ch * k)
        y = cols @ self.w.reshape(out_ch, in_ch * k).T
        y = y.reshape(batch, length, out_ch).transpose(0, 2, 1) + self.b[None, :, None]
        if train:
            self._cache = (cols, x.shape, pad_l)
        return np.ascontiguousarray(y)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        cols, x_shape, pad_l = self._cache
        batch, in_ch, length = x_shape
        out_ch, _, k = self.w.shape
        g = np.ascontiguousarray(grad.transpose(0, 2, 1)).reshape(batch * length, out_ch)
        self.dw = (g.T @ cols).reshape(self.w.shape)
        self.db = g.sum(axis=0)
        dcols = (g @ self.w.reshape(out_ch, in_ch * k)).reshape(batch, length, in_ch, k)
        dxp = np.zeros((batch, in_ch, length + k - 1), dtype=grad.dtype)
        for tap in range(k):
            dxp[:, :, tap : tap + length] += dcols[:, :, :, tap].transpose(0, 2, 1)
        return dxp[:, :, pad_l : pad_l + length]


class BatchNormLayer:
    """Per-channel normalization over (batch, length).

    Training mode uses batch statistics (population variance) and rolls
    them into running estimates; inference mode uses the running values.
    """

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5, dtype=np.float32):
        self.gamma = np.ones(channels, dtype=dtype)
        self.beta = np.zeros(channels, dtype=dtype)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.momentum = momentum
        self.eps = eps
        self.dgamma = np.zeros_like(self.gamma)
        self.dbeta = np.zeros_like(self.beta)
        self._cache = None

    def forward(self, x: np.ndarray, train: bool, update_stats: bool = True) -> np.ndarray:
        if x.ndim != 3 or x.shape[1] != self.gamma.shape[0]:
            raise ShapeMismatch(f"batchnorm expects (B, {self.gamma.shape[0]}, L), got {x.shape}")
        if train:
            if x.shape[0] * x.shape[2] < 2:
                raise ShapeMismatch("batch statistics need batch*length >= 2")
            mean = x.mean(axis=(0, 2))
            var = x.var(axis=(0, 2))
            if update_stats:
                m = self.momentum
                self.running_mean = ((1 - m) * self.running_mean + m * mean).astype(x.dtype)
                self.running_var = ((1 - m) * self.running_var + m * var).astype(x.dtype)
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
        if train:
            self._cache = (xhat, inv_std)
        return self.gamma[None, :, None] * xhat + self.beta[None, :, None]

    def backward(self, grad: np.ndarray) -> np.ndarray:
        xhat, inv_std = self._cache
        m = grad.shape[0] * grad.shape[2]
        self.dgamma = (grad * xhat).sum(axis=(0, 2))
        self.dbeta = grad.sum(axis=(0, 2))
        dxhat = grad * self.gamma[None, :, None]
        # Batch statistics depend on every element, hence the two
        # mean-correction terms beside the direct path.
        sum_d = dxhat.sum(axis=(0, 2), keepdims=True)
        sum_dx = (dxhat * xhat).sum(axis=(0, 2), keepdims=True)
        return (inv_std[None, :, None] / m) * (m * dxhat - sum_d - xhat * sum_dx)
