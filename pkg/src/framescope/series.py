"""Core data model: per-frame size series, labeled datasets, preprocessing.

A video becomes a single vector of per-frame compressed sizes (bits, in
encoding order). Everything downstream -- distribution analysis, the
classifier, the warping baseline -- consumes windows of that vector.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ClassTooSmall, TooShort


class Codec(Enum):
    UNKNOWN = 0
    AVC = 1
    HEVC = 2


@dataclass(frozen=True, eq=False)
class FrameSizeSeries:
    """Per-frame compressed sizes in bits, in encoding order.

    ``sizes`` is an int64 vector with every entry > 0. ``fps`` is metadata
    only (0.0 when unknown); series are never resampled across frame rates.
    """

    sizes: np.ndarray
    codec: Codec = Codec.UNKNOWN
    fps: float = 0.0
    source_id: str = ""

    def __post_init__(self):
        arr = np.asarray(self.sizes, dtype=np.int64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("sizes must be a non-empty 1-D sequence")
        if (arr <= 0).any():
            raise ValueError("every frame size must be > 0 bits")
        object.__setattr__(self, "sizes", arr)

    def __len__(self) -> int:
        return int(self.sizes.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameSizeSeries):
            return NotImplemented
        return (
            np.array_equal(self.sizes, other.sizes)
            and self.codec == other.codec
            and self.fps == other.fps
            and self.source_id == other.source_id
        )

    @property
    def total_bits(self) -> int:
        return int(self.sizes.sum())


@dataclass
class LabeledDataset:
    """(series, class index) pairs plus the ordered class-name table."""

    items: list[tuple[FrameSizeSeries, int]]
    class_names: list[str]

    def __post_init__(self):
        c = len(self.class_names)
        if c < 1:
            raise ValueError("need at least one class name")
        seen = [0] * c
        for _, idx in self.items:
            if not 0 <= idx < c:
                raise ValueError(f"class index {idx} outside [0, {c})")
            seen[idx] += 1
        missing = [self.class_names[i] for i, n in enumerate(seen) if n == 0]
        if missing:
            raise ValueError(f"classes with no items: {missing}")

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def __len__(self) -> int:
        return len(self.items)

    def by_class(self) -> list[list[FrameSizeSeries]]:
        buckets: list[list[FrameSizeSeries]] = [[] for _ in self.class_names]
        for series, idx in self.items:
            buckets[idx].append(series)
        return buckets


@dataclass(frozen=True)
class PreprocessSpec:
    """Window length, normalization mode, and window placement policy.

    ``policy`` is "prefix" (frames [0, N)) or "random_offset" (a contiguous
    window at a seeded uniform offset; the offset is derived from ``seed``
    and the series' source_id so distinct clips land on distinct offsets,
    deterministically).
    """

    n_frames: int
    normalization: str = "zscore"
    policy: str = "prefix"
    seed: int = 0

    def __post_init__(self):
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if self.normalization not in ("zscore", "none"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.policy not in ("prefix", "random_offset"):
            raise ValueError(f"unknown window policy {self.policy!r}")


def window(series: FrameSizeSeries, spec: PreprocessSpec) -> np.ndarray:
    """Cut a length-N float window out of a series per the spec's policy."""
    n = spec.n_frames
    t = len(series)
    if t < n:
        raise TooShort(f"series {series.source_id!r} has {t} frames, need {n}")
    if spec.policy == "prefix" or t == n:
        lo = 0
    else:
        mix = zlib.crc32(series.source_id.encode("utf-8"))
        rng = np.random.default_rng([spec.seed, mix])
        lo = int(rng.integers(0, t - n + 1))
    return series.sizes[lo : lo + n].astype(np.float64)


def znorm(x: np.ndarray) -> np.ndarray:
    """Zero-mean unit-variance scaling (population std).

    A constant vector maps to all zeros rather than dividing by ~0.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 1:
        raise ValueError("znorm needs at least one value")
    mu = x.mean()
    sd = x.std()
    if sd < 1e-12:
        return np.zeros_like(x)
    return (x - mu) / sd


def preprocess(series: FrameSizeSeries, spec: PreprocessSpec) -> np.ndarray:
    """Window then normalize one series into a model-ready float vector."""
    x = window(series, spec)
    if spec.normalization == "zscore":
        x = znorm(x)
    return x


def prepare_matrix(ds: LabeledDataset, spec: PreprocessSpec) -> tuple[np.ndarray, np.ndarray]:
    """Vectorize a dataset into (X, y): X is (n, N) float64, y is int labels."""
    xs = np.stack([preprocess(s, spec) for s, _ in ds.items])
    ys = np.array([idx for _, idx in ds.items], dtype=np.int64)
    return xs, ys


def _split_counts(n: int, fractions: tuple[float, float, float]) -> list[int]:
    # Largest-remainder apportionment, then guarantee >= 1 per part by
    # stealing from the largest part. Deterministic, order-stable.
    floors = [int(np.floor(n * f)) for f in fractions]
    remainders = [n * f - fl for f, fl in zip(fractions, floors)]
    short = n - sum(floors)
    for i in sorted(range(3), key=lambda i: -remainders[i])[:short]:
        floors[i] += 1
    while min(floors) == 0:
        floors[int(np.argmax(floors))] -= 1
        floors[int(np.argmin(floors))] += 1
    return floors


def split(
    ds: LabeledDataset,
    fractions: tuple[float, float, float],
    seed: int,
) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Seeded stratified split into (train, val, test).

    Every class contributes at least one item to each part, so all three
    outputs are valid datasets over the same class table.
    """
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError("fractions must be three positive numbers")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    per_class: list[list[int]] = [[] for _ in ds.class_names]
    for pos, (_, idx) in enumerate(ds.items):
        per_class[idx].append(pos)
    for name, members in zip(ds.class_names, per_class):
        if len(members) < 3:
            raise ClassTooSmall(f"class {name!r} has {len(members)} items, need >= 3")

    rng = np.random.default_rng(seed)
    parts: list[list[tuple[FrameSizeSeries, int]]] = [[], [], []]
    for idx, members in enumerate(per_class):
        order = rng.permutation(len(members))
        counts = _split_counts(len(members), tuple(fractions))
        at = 0
        for part, cnt in zip(parts, counts):
            for k in order[at : at + cnt]:
                part.append(ds.items[members[k]])
            at += cnt
    return tuple(LabeledDataset(p, list(ds.class_names)) for p in parts)


def split_train_val(
    ds: LabeledDataset, val_fraction: float, seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Two-way stratified split; every class lands in both parts."""
    if not 0 < val_fraction < 1:
        raise ValueError("val_fraction must be in (0, 1)")
    per_class: list[list[int]] = [[] for _ in ds.class_names]
    for pos, (_, idx) in enumerate(ds.items):
        per_class[idx].append(pos)
    for name, members in zip(ds.class_names, per_class):
        if len(members) < 2:
            raise ClassTooSmall(f"class {name!r} has {len(members)} items, need >= 2")
    rng = np.random.default_rng(seed)
    train_items, val_items = [], []
    for members in per_class:
        order = rng.permutation(len(members))
        n_val = min(len(members) - 1, max(1, round(len(members) * val_fraction)))
        for slot, k in enumerate(order):
            target = val_items if slot < n_val else train_items
            target.append(ds.items[members[k]])
    return (
        LabeledDataset(train_items, list(ds.class_names)),
        LabeledDataset(val_items, list(ds.class_names)),
    )
