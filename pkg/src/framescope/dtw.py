"""Dynamic time warping distance and 1-NN classification baseline.

The O(len a * len b) recurrence runs in a compiled two-row loop so that
multi-thousand-frame series stay tractable; memory is O(min length).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import BandInfeasible, EmptyDataset, EmptyInput
from .series import LabeledDataset, PreprocessSpec, preprocess


@dataclass(frozen=True)
class DtwConfig:
    """window: optional Sakoe-Chiba band radius; None means unbanded."""

    window: int | None = None

    def __post_init__(self):
        if self.window is not None and self.window < 0:
            raise ValueError("band radius must be >= 0")


@njit(cache=True)
def _dtw_kernel(a, b, band):  # pragma: no cover - exercised via dtw_distance
    n = a.shape[0]
    m = b.shape[0]
    inf = np.inf
    prev = np.full(m, inf)
    cur = np.full(m, inf)
    for i in range(n):
        if band >= 0:
            j_lo = i - band if i - band > 0 else 0
            j_hi = i + band + 1 if i + band + 1 < m else m
        else:
            j_lo = 0
            j_hi = m
        for j in range(j_lo, j_hi):
            cost = abs(a[i] - b[j])
            if i == 0 and j == 0:
                cur[j] = cost
                continue
            best = inf
            if i > 0 and prev[j] < best:
                best = prev[j]
            if j > 0 and cur[j - 1] < best:
                best = cur[j - 1]
            if i > 0 and j > 0 and prev[j - 1] < best:
                best = prev[j - 1]
            cur[j] = cost + best
        prev, cur = cur, prev
        cur[:] = inf
    return prev[m - 1]


def dtw_distance(a: np.ndarray, b: np.ndarray, cfg: DtwConfig = DtwConfig()) -> float:
    """Minimum cumulative |a_i - b_j| over monotone alignment paths."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise EmptyInput("DTW inputs must be non-empty")
    band = -1
    if cfg.window is not None:
        if abs(a.size - b.size) > cfg.window:
            raise BandInfeasible(
                f"band radius {cfg.window} cannot align lengths {a.size} and {b.size}"
            )
        band = cfg.window
    return float(_dtw_kernel(a, b, band))


def knn_classify(
    train: LabeledDataset,
    query: np.ndarray,
    k: int = 1,
    cfg: DtwConfig = DtwConfig(),
    prep: PreprocessSpec | None = None,
) -> int:
    """Majority label among the k DTW-nearest training items.

    ``prep``, when given, windows and normalizes each training series the
    same way the query was prepared; otherwise raw sizes are compared.
    Distance ties go to the earlier training index, vote ties to the
    smallest class index.
    """
    if len(train) == 0:
        raise EmptyDataset("empty training set")
    if not 1 <= k <= len(train):
        raise ValueError(f"k must be in [1, {len(train)}]")
    query = np.asarray(query, dtype=np.float64)
    scored = []
    for index, (series, label) in enumerate(train.items):
        ref = preprocess(series, prep) if prep is not None else series.sizes.astype(np.float64)
        scored.append((dtw_distance(query, ref, cfg), index, label))
    scored.sort()
    votes = np.zeros(train.n_classes, dtype=np.int64)
    for _, _, label in scored[:k]:
        votes[label] += 1
    return int(np.argmax(votes))
