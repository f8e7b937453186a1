"""
Enhancement Filters

The two filters that produce the privileged channels of a patch:

1. histogram_equalize - global CDF mapping over a fixed number of bins
2. adjust_contrast    - percentile-based linear stretch with clamping

Both work on normalized intensities, so 8-bit and 16-bit sources share one
code path. Both are pure functions of their input.
"""
import warnings

import numpy as np

from common.errors import ArgumentError, DegenerateStretchWarning
from .image import GrayImage

# 256 bins regardless of source depth keeps the equalized channel identical
# for 8-bit and 16-bit versions of the same picture
DEFAULT_BINS = 256
DEFAULT_P_LOW = 2.0
DEFAULT_P_HIGH = 98.0


def bin_indices(data: np.ndarray, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Bin index of every intensity; 1.0 falls in the last bin."""
    return np.minimum((data * bins).astype(np.int64), bins - 1)


def histogram_equalize(img: GrayImage, bins: int = DEFAULT_BINS) -> GrayImage:
    """
    Map each pixel to the normalized cumulative histogram of its bin.

    Output values are cdf(bin) = (#pixels in bins <= bin) / #pixels, so a
    constant image maps to all ones and the mapping is monotone.
    """
    if bins < 1:
        raise ArgumentError(f"bins must be >= 1, got {bins}")
    if img.data.size == 0:
        return img
    index = bin_indices(img.data, bins)
    counts = np.bincount(index.ravel(), minlength=bins)
    cdf = np.cumsum(counts, dtype=np.float64) / float(index.size)
    return GrayImage(cdf[index], img.source_bit_depth)


def adjust_contrast(
    img: GrayImage,
    p_low: float = DEFAULT_P_LOW,
    p_high: float = DEFAULT_P_HIGH,
) -> GrayImage:
    """
    Linear stretch sending percentile(p_low) to 0 and percentile(p_high) to 1.

    Values outside the stretched range are clamped. When both percentiles
    coincide the image has no usable dynamic range: an all-zero image is
    returned and a DegenerateStretchWarning is emitted.

    Args:
        img: Source image
        p_low: Lower percentile, 0 <= p_low < p_high
        p_high: Upper percentile, p_high <= 100

    Raises:
        ArgumentError: percentiles out of order or out of [0, 100], or an
            empty image
    """
    if not (0.0 <= p_low < p_high <= 100.0):
        raise ArgumentError(f"Need 0 <= p_low < p_high <= 100, got ({p_low}, {p_high})")
    if img.data.size == 0:
        raise ArgumentError("Cannot stretch an empty image")

    low, high = np.percentile(img.data, [p_low, p_high])
    if high <= low:
        message = f"Degenerate contrast stretch: percentile({p_low}) == percentile({p_high}) == {low:.6g}"
        warnings.warn(message, DegenerateStretchWarning, stacklevel=2)
        return GrayImage(np.zeros_like(img.data), img.source_bit_depth)

    stretched = (img.data - low) / (high - low)
    return GrayImage(np.clip(stretched, 0.0, 1.0), img.source_bit_depth)
