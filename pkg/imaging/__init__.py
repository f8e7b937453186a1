"""
LupiSeg Imaging Package

Grayscale rasters, binary masks, raster I/O and the two enhancement
filters that make up the privileged channels.

Quick Start:
    from imaging import load_gray_image, histogram_equalize, adjust_contrast

    img = load_gray_image("scan.png")
    equalized = histogram_equalize(img)
    stretched = adjust_contrast(img, p_low=2, p_high=98)
"""
from .image import (
    GrayImage,
    MaskImage,
    LabeledImage,
    load_gray_image,
    save_gray_image,
    load_mask,
    save_mask,
)
from .filters import (
    DEFAULT_BINS,
    DEFAULT_P_LOW,
    DEFAULT_P_HIGH,
    histogram_equalize,
    adjust_contrast,
)

__all__ = [
    "GrayImage",
    "MaskImage",
    "LabeledImage",
    "load_gray_image",
    "save_gray_image",
    "load_mask",
    "save_mask",
    "DEFAULT_BINS",
    "DEFAULT_P_LOW",
    "DEFAULT_P_HIGH",
    "histogram_equalize",
    "adjust_contrast",
]
