"""Residual 1-D network for frame-size series classification.

Three residual blocks feed global average pooling and a dense softmax
head. Each block runs conv(k=8)/BN/relu, conv(k=5)/BN/relu, conv(k=3)/BN,
adds a shortcut (identity when channel counts match, otherwise a 1x1
conv + BN), and applies a final relu. Default widths are 256/512/512.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from .layers import BatchNormLayer, ConvLayer

DEFAULT_FILTERS = (256, 512, 512)
DEFAULT_KERNELS = (8, 5, 3)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean negative log-probability of the true class."""
    targets = np.asarray(targets)
    if probs.ndim != 2 or targets.shape != (probs.shape[0],):
        raise ShapeMismatch(f"probs {probs.shape} vs targets {targets.shape}")
    if targets.size and (targets.min() < 0 or targets.max() >= probs.shape[1]):
        raise ShapeMismatch("target index outside class range")
    picked = probs[np.arange(probs.shape[0]), targets]
    return float(-np.log(np.clip(picked, 1e-12, None)).mean())


class ResidualBlock:
    def __init__(self, in_ch: int, out_ch: int, kernels, rng, dtype):
        k1, k2, k3 = kernels
        self.conv1 = ConvLayer(in_ch, out_ch, k1, rng, dtype)
        self.bn1 = BatchNormLayer(out_ch, dtype=dtype)
        self.conv2 = ConvLayer(out_ch, out_ch, k2, rng, dtype)
        self.bn2 = BatchNormLayer(out_ch, dtype=dtype)
        self.conv3 = ConvLayer(out_ch, out_ch, k3, rng, dtype)
        self.bn3 = BatchNormLayer(out_ch, dtype=dtype)
        if in_ch == out_ch:
            self.shortcut_conv = None
            self.shortcut_bn = None
        else:
            self.shortcut_conv = ConvLayer(in_ch, out_ch, 1, rng, dtype)
            self.shortcut_bn = BatchNormLayer(out_ch, dtype=dtype)
        self._cache = None

    def forward(self, x: np.ndarray, train: bool, update_stats: bool = True) -> np.ndarray:
        h1 = self.bn1.forward(self.conv1.forward(x, train), train, update_stats)
        a1 = np.maximum(h1, 0)
        h2 = self.bn2.forward(self.conv2.forward(a1, train), train, update_stats)
        a2 = np.maximum(h2, 0)
        h3 = self.bn3.forward(self.conv3.forward(a2, train), train, update_stats)
        if self.shortcut_conv is None:
            s = x
        else:
            s = self.shortcut_bn.forward(self.shortcut_conv.forward(x, train), train, update_stats)
        out = np.maximum(h3 + s, 0)
        if train:
            self._cache = (h1 > 0, h2 > 0, out > 0)
        return out

    def backward(self, grad: np.ndarray) -> np.ndarray:
        mask1, mask2, mask_out = self._cache
        g = grad * mask_out
        # Addition fans the same gradient into both branches.
        dmain = self.conv3.backward(self.bn3.backward(g)) * mask2
        dmain = self.conv2.backward(self.bn2.backward(dmain)) * mask1
        dmain = self.conv1.backward(self.bn1.backward(dmain))
        if self.shortcut_conv is None:
            dshort = g
        else:
            dshort = self.shortcut_conv.backward(self.shortcut_bn.backward(g))
        return dmain + dshort

    def layers(self):
        out = [self.conv1, self.bn1, self.conv2, self.bn2, self.conv3, self.bn3]
        if self.shortcut_conv is not None:
            out += [self.shortcut_conv, self.shortcut_bn]
        return out


class Model:
    """Residual network plus class table; see :func:`build_model`."""

    def __init__(self, class_names, filters, kernels, rng, dtype=np.float32):
        if len(filters) != 3:
            raise ShapeMismatch("exactly three residual blocks are expected")
        self.class_names = list(class_names)
        self.filters = tuple(int(f) for f in filters)
        self.kernels = tuple(int(k) for k in kernels)
        self.dtype = dtype
        self.blocks = []
        in_ch = 1
        for out_ch in self.filters:
            self.blocks.append(ResidualBlock(in_ch, out_ch, self.kernels, rng, dtype))
            in_ch = out_ch
        c = len(self.class_names)
        limit = np.sqrt(6.0 / in_ch)
        self.head_w = rng.uniform(-limit, limit, size=(c, in_ch)).astype(dtype)
        self.head_b = np.zeros(c, dtype=dtype)
        self.d_head_w = np.zeros_like(self.head_w)
        self.d_head_b = np.zeros_like(self.head_b)
        self._cache = None

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def min_length(self) -> int:
        return max(self.kernels)

    def forward(self, x: np.ndarray, train: bool = False, update_stats: bool = True) -> np.ndarray:
        """Class probabilities, rows summing to 1."""
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 3 or x.shape[1] != 1:
            raise ShapeMismatch(f"input must be (B, 1, N), got {x.shape}")
        if x.shape[2] < self.min_length():
            raise ShapeMismatch(f"input length {x.shape[2]} < minimum {self.min_length()}")
        h = x
        for block in self.blocks:
            h = block.forward(h, train, update_stats)
        pooled = h.mean(axis=2)  # global average over length
        logits = pooled @ self.head_w.T + self.head_b
        probs = softmax(logits)
        if train:
            self._cache = (pooled, probs, h.shape[2])
        return probs

    def backward(self, targets: np.ndarray) -> list[np.ndarray]:
        """Gradients of mean cross-entropy, aligned with :meth:`parameters`."""
        pooled, probs, length = self._cache
        batch, c = probs.shape
        dlogits = probs.copy()
        dlogits[np.arange(batch), np.asarray(targets)] -= 1.0
        dlogits /= batch  # softmax + cross-entropy collapse to (p - y)/B
        self.d_head_w = dlogits.T @ pooled
        self.d_head_b = dlogits.sum(axis=0)
        dpooled = dlogits @ self.head_w
        g = np.repeat(dpooled[:, :, None] / length, length, axis=2).astype(self.dtype)
        for block in reversed(self.blocks):
            g = block.backward(g)
        return self.gradients()

    def parameters(self) -> list[np.ndarray]:
        """Trainable arrays in declaration order."""
        out = []
        for block in self.blocks:
            for layer in block.layers():
                if isinstance(layer, ConvLayer):
                    out += [layer.w, layer.b]
                else:
                    out += [layer.gamma, layer.beta]
        out += [self.head_w, self.head_b]
        return out

    def gradients(self) -> list[np.ndarray]:
        out = []
        for block in self.blocks:
            for layer in block.layers():
                if isinstance(layer, ConvLayer):
                    out += [layer.dw, layer.db]
                else:
                    out += [layer.dgamma, layer.dbeta]
        out += [self.d_head_w, self.d_head_b]
        return out

    def state_arrays(self) -> list[np.ndarray]:
        """Everything a frozen model needs, in declaration order."""
        out = []
        for block in self.blocks:
            for layer in block.layers():
                if isinstance(layer, ConvLayer):
                    out += [layer.w, layer.b]
                else:
                    out += [layer.gamma, layer.beta, layer.running_mean, layer.running_var]
        out += [self.head_w, self.head_b]
        return out

    def snapshot(self) -> list[np.ndarray]:
        return [a.copy() for a in self.state_arrays()]

    def restore(self, snapshot: list[np.ndarray]) -> None:
        for dst, src in zip(self.state_arrays(), snapshot, strict=True):
            dst[...] = src


def build_model(
    class_names,
    filters=DEFAULT_FILTERS,
    kernels=DEFAULT_KERNELS,
    seed: int = 0,
    dtype=np.float32,
) -> Model:
    """Seeded construction: He-uniform convolutions, unit-gain batch norm."""
    rng = np.random.default_rng(seed)
    return Model(class_names, filters, kernels, rng, dtype)
