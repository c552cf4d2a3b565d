"""Frame-size distribution estimation and divergence matrices.

Pooled per-class size histograms are compared with smoothed KL divergence;
the class-vs-class matrix puts split-half intra-class divergence on the
diagonal so inter/intra separation can be read off directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BinMismatch, ClassTooSmall, EmptyInput
from .series import LabeledDataset


@dataclass(frozen=True)
class SizeHistogram:
    """Normalized histogram over frame sizes (bits)."""

    bin_edges: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if edges.ndim != 1 or edges.size < 2 or (np.diff(edges) <= 0).any():
            raise ValueError("bin_edges must be >= 2 strictly ascending values")
        if probs.shape != (edges.size - 1,):
            raise ValueError("probs length must be len(bin_edges) - 1")
        if (probs < 0).any() or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("probs must be non-negative and sum to 1")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "probs", probs)


def histogram(sizes: np.ndarray, bin_edges: np.ndarray) -> SizeHistogram:
    """Count sizes into bins; out-of-range samples clamp to the end bins."""
    sizes = np.asarray(sizes, dtype=np.float64)
    if sizes.size < 1:
        raise EmptyInput("histogram needs at least one sample")
    edges = np.asarray(bin_edges, dtype=np.float64)
    clamped = np.clip(sizes, edges[0], edges[-1])
    counts, _ = np.histogram(clamped, bins=edges)
    return SizeHistogram(edges, counts / counts.sum())


def kld(p: SizeHistogram, q: SizeHistogram, epsilon: float = 1e-10) -> float:
    """Smoothed Kullback-Leibler divergence KL(p || q) in nats.

    epsilon is added to every bin and both histograms are renormalized, so
    the divergence is finite for disjoint supports and exactly zero for
    identical inputs.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if p.bin_edges.shape != q.bin_edges.shape or not np.array_equal(p.bin_edges, q.bin_edges):
        raise BinMismatch("histograms use different bin edges")
    ps = p.probs + epsilon
    qs = q.probs + epsilon
    ps = ps / ps.sum()
    qs = qs / qs.sum()
    return float(np.sum(ps * np.log(ps / qs)))


@dataclass(frozen=True)
class KldMatrix:
    """values[i][j] = KL(class i || class j); diagonal is split-half intra."""

    class_names: list[str]
    values: np.ndarray

    def inter_intra_ratio(self) -> float:
        """Median off-diagonal divided by median diagonal."""
        c = len(self.class_names)
        if c < 2:
            return float("nan")
        off = self.values[~np.eye(c, dtype=bool)]
        diag = np.diag(self.values)
        den = float(np.median(diag))
        return float(np.median(off)) / max(den, 1e-300)


def shared_edges(ds: LabeledDataset, bins: int) -> np.ndarray:
    """Equal-width edges spanning the pooled global size range."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    lo = min(int(s.sizes.min()) for s, _ in ds.items)
    hi = max(int(s.sizes.max()) for s, _ in ds.items)
    if hi <= lo:
        hi = lo + 1
    return np.linspace(lo, hi, bins + 1)


def class_kld_matrix(ds: LabeledDataset, bins: int = 64, seed: int = 0) -> KldMatrix:
    """Inter/intra-class divergence over pooled per-class frame sizes.

    Bin edges are shared across classes (global min/max, equal width). The
    diagonal entry for a class is the divergence between two halves of a
    seeded shuffle of its pooled sizes.
    """
    for name, bucket in zip(ds.class_names, ds.by_class()):
        if len(bucket) < 2:
            raise ClassTooSmall(f"class {name!r} needs >= 2 items for intra-class KLD")
    edges = shared_edges(ds, bins)
    pooled = [np.concatenate([s.sizes for s in bucket]) for bucket in ds.by_class()]
    hists = [histogram(p, edges) for p in pooled]

    rng = np.random.default_rng(seed)
    c = len(ds.class_names)
    values = np.zeros((c, c))
    for i in range(c):
        for j in range(c):
            if i != j:
                values[i, j] = kld(hists[i], hists[j])
                continue
            shuffled = rng.permutation(pooled[i])
            half = shuffled.size // 2
            values[i, i] = kld(
                histogram(shuffled[:half], edges), histogram(shuffled[half:], edges)
            )
    return KldMatrix(list(ds.class_names), values)
