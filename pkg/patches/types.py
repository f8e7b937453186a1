"""
Patch Pipeline Types

ExtractionParams - the patch extraction knobs (full-scale defaults)
PatchRecord      - a validated crop with provenance
EnhancedPatch    - its 3-channel privileged twin
DatasetSplit     - patient-disjoint train/test sets plus fold partition
ExtractionResult - patches of one image plus the shortfall report
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from common.errors import ArgumentError
from imaging import GrayImage, MaskImage


class ClassTag(str, Enum):
    """Patch category, fixed at extraction time."""
    HEALTHY = "healthy"
    NON_HEALTHY = "non-healthy"


class ExtractionParams(BaseModel):
    """
    Patch extraction parameters.

    Defaults are full scale: 40 healthy and 40 non-healthy patches
    per image, mass-area-ratio 0.01, breast-area-ratio 0.8, 1024 px patches.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    h_ppi: int = Field(40, ge=0)
    nh_ppi: int = Field(40, ge=0)
    mar: float = Field(0.01, ge=0.0, le=1.0)
    bar: float = Field(0.8, ge=0.0, le=1.0)
    patch_size: int = Field(1024, ge=1)
    max_attempts_per_patch: int = Field(200, ge=1)
    background_threshold: float = Field(0.02, ge=0.0, le=1.0)


@dataclass(frozen=True)
class PatchRecord:
    """
    A square crop of a source image with its mask and provenance.

    origin is the (x, y) top-left corner in the source image.
    """
    image: GrayImage
    mask: MaskImage
    patient_id: str
    source_image_id: str
    origin: Tuple[int, int]
    class_tag: ClassTag

    def __post_init__(self):
        if self.image.shape != self.mask.shape:
            raise ArgumentError(f"Patch image {self.image.shape} and mask {self.mask.shape} differ")
        if self.image.height != self.image.width:
            raise ArgumentError(f"Patches are square, got {self.image.shape}")
        object.__setattr__(self, "class_tag", ClassTag(self.class_tag))
        object.__setattr__(self, "origin", (int(self.origin[0]), int(self.origin[1])))
        if self.class_tag is ClassTag.HEALTHY and self.mask.tumor_pixels() != 0:
            raise ArgumentError("A healthy patch must not contain tumor pixels")

    @property
    def size(self) -> int:
        return self.image.width


@dataclass(frozen=True)
class EnhancedPatch:
    """
    Privileged 3-channel version of a patch:
    [original, histogram-equalized, contrast-adjusted].
    """
    channels: Tuple[GrayImage, GrayImage, GrayImage]
    mask: MaskImage

    def __post_init__(self):
        if len(self.channels) != 3:
            raise ArgumentError(f"EnhancedPatch has 3 channels, got {len(self.channels)}")
        for channel in self.channels:
            if channel.shape != self.mask.shape:
                raise ArgumentError("All channels must share the mask's dimensions")
        object.__setattr__(self, "channels", tuple(self.channels))

    def stack(self) -> np.ndarray:
        """(3, H, W) float64 array of the channels."""
        return np.stack([channel.data for channel in self.channels])


@dataclass
class DatasetSplit:
    """
    Patient-disjoint train/test split.

    folds partitions range(len(train_patches)) into contiguous blocks whose
    sizes differ by at most one.
    """
    train_patches: List[PatchRecord]
    test_patches: List[PatchRecord]
    folds: List[List[int]]
    seed: int = 0

    def __post_init__(self):
        train_ids = {p.patient_id for p in self.train_patches}
        test_ids = {p.patient_id for p in self.test_patches}
        overlap = train_ids & test_ids
        if overlap:
            raise ArgumentError(f"Patients in both train and test: {sorted(overlap)[:5]}")
        flat = sorted(i for fold in self.folds for i in fold)
        if flat != list(range(len(self.train_patches))):
            raise ArgumentError("Folds must partition the train indices exactly")

    def fold(self, index: int) -> List[PatchRecord]:
        """Patches of the zero-based fold `index`, in order."""
        if not 0 <= index < len(self.folds):
            raise ArgumentError(f"Fold {index} out of range (have {len(self.folds)})")
        return [self.train_patches[i] for i in self.folds[index]]

    @property
    def train_patients(self) -> List[str]:
        return list(dict.fromkeys(p.patient_id for p in self.train_patches))

    @property
    def test_patients(self) -> List[str]:
        return list(dict.fromkeys(p.patient_id for p in self.test_patches))


@dataclass
class ExtractionResult:
    """Patches extracted from one image plus the shortfall report."""
    patches: List[PatchRecord] = field(default_factory=list)
    shortfall_healthy: int = 0
    shortfall_non_healthy: int = 0

    @property
    def shortfall(self) -> int:
        return self.shortfall_healthy + self.shortfall_non_healthy

    def report(self) -> Dict[str, int]:
        return {
            "healthy": self.shortfall_healthy,
            "non_healthy": self.shortfall_non_healthy,
            "total": self.shortfall,
        }

    def by_class(self, tag: ClassTag) -> List[PatchRecord]:
        return [p for p in self.patches if p.class_tag is tag]


