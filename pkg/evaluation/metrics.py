"""
Pixel-wise F1 and confidence intervals.
"""
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from common.errors import ArgumentError
from imaging import MaskImage

Aggregation = Literal["micro", "macro"]


def confusion_counts(pred: MaskImage, truth: MaskImage) -> Tuple[int, int, int]:
    """(TP, FP, FN) on the tumor class."""
    if pred.shape != truth.shape:
        raise ArgumentError(f"Mask shapes differ: {pred.shape} vs {truth.shape}")
    p = pred.labels.astype(bool)
    t = truth.labels.astype(bool)
    return int(np.count_nonzero(p & t)), int(np.count_nonzero(p & ~t)), int(np.count_nonzero(~p & t))


def _f1(tp: int, fp: int, fn: int) -> float:
    denominator = 2 * tp + fp + fn
    return 1.0 if denominator == 0 else 2 * tp / denominator


def f1_score(pred: Sequence[MaskImage], truth: Sequence[MaskImage], aggregation: Aggregation = "micro") -> float:
    """
    F1 of the tumor class over a set of masks.

    micro pools the confusion counts of every pixel of every mask; macro
    averages the per-mask F1. An empty denominator counts as perfect (1.0).

    Raises:
        ArgumentError: different set sizes or mask dimensions
    """
    if len(pred) != len(truth):
        raise ArgumentError(f"{len(pred)} predictions for {len(truth)} ground-truth masks")
    counts = [confusion_counts(p, t) for p, t in zip(pred, truth)]
    if aggregation == "micro":
        tp, fp, fn = (sum(c[i] for c in counts) for i in range(3))
        return _f1(tp, fp, fn)
    if aggregation == "macro":
        if not counts:
            return 1.0
        return float(np.mean([_f1(*c) for c in counts]))
    raise ArgumentError(f"Unknown F1 aggregation: {aggregation}")


def confidence_interval_95(samples: Sequence[float]) -> Tuple[float, float]:
    """
    Mean and half-width of the two-sided 95% t-interval.

        half_width = t(0.975, n - 1) * s / sqrt(n), s with ddof=1

    Raises:
        ArgumentError: fewer than 2 samples
    """
    values = np.asarray(samples, dtype=np.float64)
    if values.size < 2:
        raise ArgumentError(f"A confidence interval needs at least 2 samples, got {values.size}")
    mean = float(values.mean())
    spread = 0.0 if np.ptp(values) == 0 else float(values.std(ddof=1))
    half_width = float(stats.t.ppf(0.975, values.size - 1)) * spread / np.sqrt(values.size)
    return mean, float(half_width)


def summarize(samples: Sequence[float]) -> Tuple[float, Optional[float]]:
    """Mean plus CI half-width, or None for a single sample."""
    if len(samples) == 1:
        return float(samples[0]), None
    return confidence_interval_95(samples)
