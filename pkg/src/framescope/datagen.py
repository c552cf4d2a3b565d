"""Seeded synthetic frame-size sequences with controllable class structure.

Each class profile fixes a GOP cadence, intra/predicted size ratio, jitter
texture, and scene-change rate; together these shape size series the way
editing style and encoder rate control shape real streams. The standard
benchmark bakes a fixed, well-separated profile table for end-to-end runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadProfile
from .series import Codec, FrameSizeSeries, LabeledDataset


@dataclass(frozen=True)
class ClassProfile:
    """Generator parameters for one synthetic "style" of video."""

    gop_length: int
    i_size_mean: float
    p_size_mean: float
    b_size_mean: float
    size_jitter: float = 0.1
    scene_change_rate: float = 0.0
    b_frames: bool = False

    def __post_init__(self):
        if self.gop_length < 2:
            raise BadProfile("gop_length must be >= 2")
        if min(self.i_size_mean, self.p_size_mean, self.b_size_mean) <= 0:
            raise BadProfile("frame size means must be > 0")
        if not 0.0 <= self.scene_change_rate <= 0.2:
            raise BadProfile("scene_change_rate must be in [0, 0.2]")
        if self.size_jitter < 0:
            raise BadProfile("size_jitter must be >= 0")


def _lognormal_size(rng: np.random.Generator, mean: float, jitter: float) -> int:
    # Multiplicative jitter keeps sizes positive; the mean-correction term
    # makes E[size] = mean for any jitter.
    sigma = math.sqrt(math.log1p(jitter * jitter))
    value = mean * math.exp(sigma * rng.standard_normal() - 0.5 * sigma * sigma)
    return max(1, round(value))


def generate(profile: ClassProfile, n_frames: int, seed) -> FrameSizeSeries:
    """One deterministic clip: I-frames on the GOP cadence, scene changes
    as outsized frames that restart the cadence."""
    if n_frames < profile.gop_length:
        raise BadProfile(f"n_frames {n_frames} shorter than one GOP ({profile.gop_length})")
    rng = np.random.default_rng(seed)
    sizes = np.empty(n_frames, dtype=np.int64)
    phase = 0
    for t in range(n_frames):
        if phase == 0:
            mean = profile.i_size_mean
        elif profile.scene_change_rate > 0 and rng.random() < profile.scene_change_rate:
            mean = profile.i_size_mean
            phase = 0
        elif profile.b_frames and phase % 3 != 0:
            mean = profile.b_size_mean
        else:
            mean = profile.p_size_mean
        sizes[t] = _lognormal_size(rng, mean, profile.size_jitter)
        phase = (phase + 1) % profile.gop_length
    return FrameSizeSeries(sizes=sizes, codec=Codec.UNKNOWN)


# Fixed benchmark table: pairwise-distinct GOP cadence, intra/predicted
# ratio, jitter texture, and scene-change behavior per class.
_BENCHMARK_PROFILES = [
    ClassProfile(gop_length=8,  i_size_mean=240_000, p_size_mean=60_000, b_size_mean=30_000, size_jitter=0.05, scene_change_rate=0.000, b_frames=False),
    ClassProfile(gop_length=10, i_size_mean=300_000, p_size_mean=50_000, b_size_mean=24_000, size_jitter=0.35, scene_change_rate=0.010, b_frames=True),
    ClassProfile(gop_length=12, i_size_mean=180_000, p_size_mean=18_000, b_size_mean=9_000,  size_jitter=0.10, scene_change_rate=0.000, b_frames=True),
    ClassProfile(gop_length=15, i_size_mean=420_000, p_size_mean=35_000, b_size_mean=18_000, size_jitter=0.20, scene_change_rate=0.004, b_frames=False),
    ClassProfile(gop_length=18, i_size_mean=120_000, p_size_mean=40_000, b_size_mean=20_000, size_jitter=0.50, scene_change_rate=0.020, b_frames=False),
    ClassProfile(gop_length=20, i_size_mean=520_000, p_size_mean=26_000, b_size_mean=13_000, size_jitter=0.08, scene_change_rate=0.000, b_frames=True),
    ClassProfile(gop_length=24, i_size_mean=600_000, p_size_mean=75_000, b_size_mean=38_000, size_jitter=0.25, scene_change_rate=0.008, b_frames=False),
    ClassProfile(gop_length=25, i_size_mean=90_000,  p_size_mean=9_000,  b_size_mean=4_500,  size_jitter=0.15, scene_change_rate=0.002, b_frames=True),
    ClassProfile(gop_length=28, i_size_mean=360_000, p_size_mean=120_000, b_size_mean=60_000, size_jitter=0.40, scene_change_rate=0.015, b_frames=False),
    ClassProfile(gop_length=30, i_size_mean=800_000, p_size_mean=40_000, b_size_mean=20_000, size_jitter=0.12, scene_change_rate=0.001, b_frames=True),
    ClassProfile(gop_length=16, i_size_mean=150_000, p_size_mean=75_000, b_size_mean=38_000, size_jitter=0.30, scene_change_rate=0.006, b_frames=False),
]


def benchmark_profiles(n_classes: int) -> list[ClassProfile]:
    if not 2 <= n_classes <= len(_BENCHMARK_PROFILES):
        raise BadProfile(f"n_classes must be in [2, {len(_BENCHMARK_PROFILES)}]")
    return _BENCHMARK_PROFILES[:n_classes]


def standard_benchmark(
    n_classes: int, clips_per_class: int, n_frames: int, seed: int
) -> LabeledDataset:
    """Deterministic labeled dataset over the fixed benchmark profiles."""
    if clips_per_class < 1:
        raise BadProfile("clips_per_class must be >= 1")
    profiles = benchmark_profiles(n_classes)
    items = []
    for ci, profile in enumerate(profiles):
        for ki in range(clips_per_class):
            series = generate(profile, n_frames, seed=[seed, ci, ki])
            series = FrameSizeSeries(
                sizes=series.sizes, codec=series.codec, fps=30.0,
                source_id=f"synth/c{ci:02d}/clip{ki:04d}",
            )
            items.append((series, ci))
    names = [f"cat{ci:02d}" for ci in range(n_classes)]
    return LabeledDataset(items, names)
