"""
Grayscale Image and Mask Types

GrayImage holds intensities normalized to [0, 1]; the source bit depth is
kept so the raster can be written back bit-exactly. MaskImage holds a
binary per-pixel annotation: 0 = healthy tissue, 1 = tumorous tissue.

Both are immutable: the backing arrays are flagged read-only at
construction, which is what makes the filters safe to run from any number
of workers.

SUPPORTED FILES:
================
- PNG, 8-bit or 16-bit grayscale
- PGM, binary P5, 8-bit or 16-bit
- Masks: 8-bit rasters, any nonzero pixel means tumor
"""
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from common.errors import ArgumentError, ImageFormatError

PathLike = Union[str, Path]

SUPPORTED_SUFFIXES = {".png", ".pgm"}
SUPPORTED_DEPTHS = (8, 16)

# Pillow modes that carry a single integer channel
_EIGHT_BIT_MODES = {"L", "1"}
_SIXTEEN_BIT_MODES = {"I;16", "I;16B", "I;16L", "I"}


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GrayImage:
    """
    Normalized grayscale raster.

    data is a (height, width) float64 array with every value in [0, 1].
    """
    data: np.ndarray
    source_bit_depth: int = 8

    def __post_init__(self):
        array = np.asarray(self.data)
        if array.ndim != 2:
            raise ArgumentError(f"GrayImage needs a 2-D array, got shape {array.shape}")
        if self.source_bit_depth not in SUPPORTED_DEPTHS:
            raise ArgumentError(f"Unsupported bit depth: {self.source_bit_depth}")
        array = _frozen(array, np.float64)
        if array.size and (not np.all(np.isfinite(array)) or array.min() < 0.0 or array.max() > 1.0):
            raise ArgumentError("GrayImage intensities must lie in [0, 1]")
        object.__setattr__(self, "data", array)

    @classmethod
    def from_array(cls, array, source_bit_depth: int = 8) -> "GrayImage":
        return cls(np.asarray(array, dtype=np.float64), source_bit_depth)

    def to_array(self) -> np.ndarray:
        """Writable float64 copy of the intensities."""
        return np.array(self.data, copy=True)

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def crop(self, x: int, y: int, size: int) -> "GrayImage":
        """Square crop with top-left corner (x, y)."""
        return GrayImage(self.data[y:y + size, x:x + size], self.source_bit_depth)

    def to_integers(self) -> np.ndarray:
        """Integer pixel values at the source bit depth."""
        scale = (1 << self.source_bit_depth) - 1
        dtype = np.uint8 if self.source_bit_depth == 8 else np.uint16
        return np.rint(self.data * scale).astype(dtype)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return (
            self.source_bit_depth == other.source_bit_depth
            and self.data.shape == other.data.shape
            and self.data.tobytes() == other.data.tobytes()
        )

    def __repr__(self) -> str:
        return f"<GrayImage({self.width}x{self.height}, {self.source_bit_depth}-bit)>"


@dataclass(frozen=True, eq=False)
class MaskImage:
    """
    Binary annotation mask.

    labels is a (height, width) uint8 array: 0 = healthy, 1 = tumor.
    """
    labels: np.ndarray

    def __post_init__(self):
        array = np.asarray(self.labels)
        if array.ndim != 2:
            raise ArgumentError(f"MaskImage needs a 2-D array, got shape {array.shape}")
        if array.size and not np.isin(array, (0, 1)).all():
            raise ArgumentError("MaskImage labels must be 0 or 1")
        object.__setattr__(self, "labels", _frozen(array, np.uint8))

    @classmethod
    def zeros(cls, height: int, width: int) -> "MaskImage":
        return cls(np.zeros((height, width), dtype=np.uint8))

    @property
    def width(self) -> int:
        return int(self.labels.shape[1])

    @property
    def height(self) -> int:
        return int(self.labels.shape[0])

    @property
    def shape(self) -> tuple:
        return self.labels.shape

    def crop(self, x: int, y: int, size: int) -> "MaskImage":
        return MaskImage(self.labels[y:y + size, x:x + size])

    def tumor_pixels(self) -> int:
        return int(self.labels.sum(dtype=np.int64))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MaskImage):
            return NotImplemented
        return self.labels.shape == other.labels.shape and bool(np.array_equal(self.labels, other.labels))

    def __repr__(self) -> str:
        return f"<MaskImage({self.width}x{self.height}, tumor={self.tumor_pixels()})>"


# =============================================================================
# RASTER I/O
# =============================================================================

def _check_suffix(path: Path) -> None:
    if path.suffix.lower() not in SUPPORTED_SUFFIXES:
        raise ImageFormatError(f"Unsupported raster type '{path.suffix}' for {path}")


def _read_raster(path: PathLike) -> tuple:
    """Return (integer array, bit depth) for a grayscale raster."""
    path = Path(path)
    _check_suffix(path)
    if not path.is_file():
        raise FileNotFoundError(f"No such raster: {path}")
    try:
        with Image.open(path) as raster:
            raster.load()
            mode = raster.mode
            array = np.array(raster)
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"Cannot decode {path}: {exc}") from exc

    if mode == "1":
        return array.astype(np.uint8) * 255, 8
    if mode in _EIGHT_BIT_MODES:
        return array.astype(np.uint8), 8
    if mode in _SIXTEEN_BIT_MODES:
        if array.size and (array.min() < 0 or array.max() > 65535):
            raise ImageFormatError(f"{path}: values outside the 16-bit range")
        return array.astype(np.uint16), 16
    raise ImageFormatError(f"{path}: mode '{mode}' is not single-channel grayscale")


def _write_raster(values: np.ndarray, bit_depth: int, path: PathLike) -> Path:
    path = Path(path)
    _check_suffix(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if bit_depth == 8:
        raster = Image.fromarray(values.astype(np.uint8))
    elif bit_depth == 16:
        # Mode "I" is written by Pillow as 16-bit PNG and maxval-65535 PGM
        raster = Image.fromarray(values.astype(np.int32))
    else:
        raise ArgumentError(f"Unsupported bit depth: {bit_depth}")
    raster.save(path)
    return path


def load_gray_image(path: PathLike) -> GrayImage:
    """
    Load a grayscale raster and normalize by (2^depth - 1).

    Raises:
        FileNotFoundError: file does not exist
        ImageFormatError: not a supported grayscale raster
    """
    values, depth = _read_raster(path)
    scale = float((1 << depth) - 1)
    return GrayImage(values.astype(np.float64) / scale, source_bit_depth=depth)


def save_gray_image(img: GrayImage, path: PathLike, bit_depth: Optional[int] = None) -> Path:
    """
    Write an image as PNG or binary PGM (chosen by suffix).

    Defaults to the image's source bit depth, which makes load -> save a
    bit-exact round trip.
    """
    depth = bit_depth or img.source_bit_depth
    if depth == img.source_bit_depth:
        values = img.to_integers()
    else:
        values = np.rint(img.data * ((1 << depth) - 1))
    return _write_raster(values, depth, path)


def load_mask(path: PathLike) -> MaskImage:
    """Load an annotation raster; any nonzero pixel is tumor."""
    values, _ = _read_raster(path)
    return MaskImage((values != 0).astype(np.uint8))


def save_mask(mask: MaskImage, path: PathLike) -> Path:
    """Write a mask as an 8-bit raster with tumor pixels at 255."""
    return _write_raster(mask.labels.astype(np.uint8) * 255, 8, path)


class LabeledImage(NamedTuple):
    """A full source image with its annotation and provenance."""
    image: GrayImage
    mask: MaskImage
    patient_id: str
    image_id: str
