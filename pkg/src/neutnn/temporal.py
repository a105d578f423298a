"""Spike-time arithmetic, gamma-cycle configuration, encoders and metrics.

Spike times are plain integers in ``[0, t_max)``.  A missing spike is the
sentinel :data:`ABSENT`, which is larger than any finite time, so ``min`` and
sorting treat it as "never" without special cases.  Volleys are 1-D integer
numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

ABSENT = 1 << 30

__all__ = [
    "ABSENT",
    "GammaCycle",
    "is_absent",
    "round_half_up",
    "encode_timeseries",
    "encode_image",
    "rand_index",
    "accuracy",
]


def is_absent(t) -> bool:
    return t >= ABSENT


def round_half_up(x):
    """Round to nearest integer with ties going up (``2.5 -> 3``)."""
    return np.floor(np.asarray(x, dtype=float) + 0.5).astype(np.int64)


@dataclass(frozen=True)
class GammaCycle:
    t_max: int = 8
    weight_bits: int = 3

    def __post_init__(self):
        if self.t_max < 2:
            raise ValueError(f"t_max must be >= 2, got {self.t_max}")
        if self.weight_bits < 1:
            raise ValueError(f"weight_bits must be >= 1, got {self.weight_bits}")

    @property
    def w_max(self) -> int:
        return (1 << self.weight_bits) - 1


def encode_timeseries(samples: Sequence[float], cycle: GammaCycle = GammaCycle(),
                      dual_rail: bool = False) -> np.ndarray:
    """Latency-encode one sequence after per-sequence min-max normalization.

    The largest sample spikes at 0, the smallest at ``t_max - 1``.  With
    ``dual_rail`` each sample gets a second, complementary line right after
    its positive line, so the volley is ``[pos0, neg0, pos1, neg1, ...]``.
    A constant sequence has no range; every rail then spikes at 0.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("encode_timeseries needs a non-empty 1-D sequence")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    lo, hi = x.min(), x.max()
    span = cycle.t_max - 1
    if hi == lo:
        pos = np.zeros(x.size, dtype=np.int64)
        neg = np.zeros(x.size, dtype=np.int64)
    else:
        v = (x - lo) / (hi - lo)
        pos = round_half_up((1.0 - v) * span)
        neg = round_half_up(v * span)
    if not dual_rail:
        return pos
    return np.stack([pos, neg], axis=1).reshape(-1)


def encode_image(pixels, cycle: GammaCycle = GammaCycle(), absent_threshold: int = 1) -> np.ndarray:
    """Intensity-to-latency encoding of a byte grid, row-major.

    Pixels below ``absent_threshold`` do not spike.  Works on a single image
    (2-D) or a stack of images (3-D, one volley per image).
    """
    p = np.asarray(pixels)
    if p.ndim not in (2, 3):
        raise ValueError(f"expected a rectangular 2-D grid (or a stack of them), got shape {p.shape}")
    p = p.astype(float)
    t = round_half_up((1.0 - p / 255.0) * (cycle.t_max - 1))
    t = np.where(p < absent_threshold, ABSENT, t)
    if p.ndim == 2:
        return t.reshape(-1)
    return t.reshape(p.shape[0], -1)


def rand_index(labels_a: Sequence, labels_b: Sequence) -> float:
    """Fraction of unordered element pairs on which two partitions agree."""
    a = list(labels_a)
    b = list(labels_b)
    if len(a) != len(b):
        raise ValueError(f"partition lengths differ: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ValueError("rand_index needs at least two elements")
    n = len(a)
    if n > 2000:
        return _rand_index_contingency(a, b)
    agree = sum((a[i] == a[j]) == (b[i] == b[j]) for i, j in combinations(range(n), 2))
    return agree / math.comb(n, 2)


def _rand_index_contingency(a, b) -> float:
    # pair counting through the contingency table, O(n) instead of O(n^2)
    _, ia = np.unique(np.asarray(a, dtype=object).astype(str), return_inverse=True)
    _, ib = np.unique(np.asarray(b, dtype=object).astype(str), return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)

    def pairs(x):
        return (x * (x - 1) // 2).sum()

    n = len(a)
    total = n * (n - 1) // 2
    same_both = pairs(table)
    same_a = pairs(table.sum(axis=1))
    same_b = pairs(table.sum(axis=0))
    agree = total + 2 * same_both - same_a - same_b
    return float(agree / total)


def accuracy(predicted: Sequence, truth: Sequence) -> float:
    p = list(predicted)
    t = list(truth)
    if len(p) != len(t):
        raise ValueError(f"length mismatch: {len(p)} vs {len(t)}")
    if not t:
        raise ValueError("accuracy of an empty set is undefined")
    return sum(x == y for x, y in zip(p, t)) / len(t)
