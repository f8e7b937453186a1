"""
Synthetic Mammogram Scenes

Each image is a soft-edged half-ellipse of breast tissue growing from the
left (chest-wall) edge on a near-black background, with zero or more
bright elliptical tumors placed entirely inside the fully-weighted tissue.
The mask marks exactly the tumor ellipses.

Tumor intensity is tissue_intensity + contrast_gap everywhere, so tumor
and tissue are separable by intensity alone at the default gap.

Intensities are quantized to 16 bits, which makes write_scenes ->
read_scenes a bit-exact round trip.
"""
import json
import logging
from pathlib import Path
from typing import List, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from common.errors import ArchiveError
from common.rng import derive_rng
from imaging import GrayImage, LabeledImage, MaskImage, load_gray_image, load_mask, save_gray_image, save_mask

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SCENES_MANIFEST = "scenes.json"
EDGE_WIDTH = 0.06
MAX_PLACEMENT_ATTEMPTS = 200
SPECKLE_SIGMA = 0.03
GRADIENT_FALLOFF = 0.3
_QUANT = 65535.0


class SyntheticSceneSpec(BaseModel):
    """Generator settings; defaults are desk scale (256 px images)."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    image_size: int = Field(256, ge=16)
    patient_count: int = Field(10, ge=1)
    images_per_patient: int = Field(2, ge=1)
    tumor_count_range: Tuple[int, int] = (1, 2)
    tumor_axis_range: Tuple[int, int] = (12, 28)
    background_texture: Literal["flat", "gradient", "speckle"] = "flat"
    contrast_gap: float = Field(0.3, gt=0.0, le=1.0)
    tissue_intensity: float = Field(0.45, gt=0.0, lt=1.0)
    background_intensity: float = Field(0.005, ge=0.0, lt=1.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "SyntheticSceneSpec":
        low, high = self.tumor_count_range
        if low < 0 or high < low:
            raise ValueError(f"tumor_count_range must satisfy 0 <= min <= max, got {self.tumor_count_range}")
        a_low, a_high = self.tumor_axis_range
        if a_low < 1 or a_high < a_low:
            raise ValueError(f"tumor_axis_range must satisfy 1 <= min <= max, got {self.tumor_axis_range}")
        if a_high >= self.image_size / 2:
            raise ValueError(f"tumor axes must stay below image_size / 2 ({self.image_size / 2})")
        if self.tissue_intensity + self.contrast_gap > 1.0:
            raise ValueError("tissue_intensity + contrast_gap must not exceed 1")
        if self.background_intensity >= self.tissue_intensity:
            raise ValueError("background must be darker than tissue")
        return self


def ellipse_mask(shape: Tuple[int, int], center: Tuple[float, float], axes: Tuple[float, float], angle: float) -> np.ndarray:
    """Boolean raster of a rotated ellipse; center is (x, y), axes are semi-axes."""
    rows, cols = np.indices(shape, dtype=np.float64)
    dx, dy = cols - center[0], rows - center[1]
    cos, sin = np.cos(angle), np.sin(angle)
    u = (dx * cos + dy * sin) / axes[0]
    v = (-dx * sin + dy * cos) / axes[1]
    return u * u + v * v <= 1.0


def _breast(spec: SyntheticSceneSpec, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """(tissue weight in [0, 1], fully-weighted core) of a half-ellipse on the left edge."""
    size = spec.image_size
    reach = size * rng.uniform(0.75, 0.9)
    half_height = size * rng.uniform(0.38, 0.47)
    rows, cols = np.indices((size, size), dtype=np.float64)
    radius = np.sqrt((cols / reach) ** 2 + ((rows - size / 2) / half_height) ** 2)
    weight = np.clip((1.0 - radius) / EDGE_WIDTH, 0.0, 1.0)
    return weight, weight >= 1.0


def _tissue(spec: SyntheticSceneSpec, rng: np.random.Generator) -> np.ndarray:
    size = spec.image_size
    tissue = np.full((size, size), spec.tissue_intensity)
    if spec.background_texture == "gradient":
        cols = np.arange(size, dtype=np.float64)[None, :]
        tissue = tissue * (1.0 - GRADIENT_FALLOFF * cols / size)
    elif spec.background_texture == "speckle":
        tissue = tissue + rng.normal(0.0, SPECKLE_SIGMA, size=(size, size))
    return tissue


def _place_tumor(spec: SyntheticSceneSpec, core: np.ndarray, rng: np.random.Generator):
    low, high = spec.tumor_axis_range
    ys, xs = np.nonzero(core)
    for _ in range(MAX_PLACEMENT_ATTEMPTS):
        axes = (float(rng.integers(low, high + 1)), float(rng.integers(low, high + 1)))
        pick = int(rng.integers(0, xs.size))
        ellipse = ellipse_mask(core.shape, (float(xs[pick]), float(ys[pick])), axes, float(rng.uniform(0, np.pi)))
        if not np.any(ellipse & ~core):
            return ellipse
    return None


def _render(spec: SyntheticSceneSpec, patient_id: str, image_id: str, rng: np.random.Generator) -> LabeledImage:
    weight, core = _breast(spec, rng)
    intensity = spec.background_intensity + weight * (_tissue(spec, rng) - spec.background_intensity)
    tumors = np.zeros(core.shape, dtype=bool)
    count = int(rng.integers(spec.tumor_count_range[0], spec.tumor_count_range[1] + 1))
    for _ in range(count):
        ellipse = _place_tumor(spec, core, rng)
        if ellipse is None:
            logger.warning("Could not place a tumor inside the breast", extra={"image_id": image_id})
            continue
        tumors |= ellipse
    tumor_level = spec.tissue_intensity + spec.contrast_gap
    if spec.background_texture == "speckle":
        tumor_level = tumor_level + rng.normal(0.0, SPECKLE_SIGMA, size=core.shape)
    intensity = np.where(tumors, tumor_level, intensity)
    intensity = np.rint(np.clip(intensity, 0.0, 1.0) * _QUANT) / _QUANT
    return LabeledImage(
        image=GrayImage(intensity, source_bit_depth=16),
        mask=MaskImage(tumors.astype(np.uint8)),
        patient_id=patient_id,
        image_id=image_id,
    )


def generate_scene(spec: SyntheticSceneSpec) -> List[LabeledImage]:
    """
    patient_count x images_per_patient labelled images, patient blocks
    contiguous. Every image has its own stream derived from (seed, image_id).
    """
    scenes = []
    for p in range(1, spec.patient_count + 1):
        patient_id = f"P{p:03d}"
        for i in range(1, spec.images_per_patient + 1):
            image_id = f"{patient_id}-I{i:02d}"
            scenes.append(_render(spec, patient_id, image_id, derive_rng(spec.seed, image_id)))
    logger.info(
        "Generated synthetic scenes",
        extra={"images": len(scenes), "texture": spec.background_texture, "seed": spec.seed},
    )
    return scenes


# =============================================================================
# SCENE FILES
# =============================================================================

class SceneEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    image_id: str
    patient_id: str
    image_file: str
    mask_file: str


class SceneManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenes: List[SceneEntry]


def write_scenes(scenes: List[LabeledImage], root: PathLike) -> Path:
    """images/<id>.png, masks/<id>.png and scenes.json under root."""
    root = Path(root)
    entries = []
    for scene in scenes:
        image_file = f"images/{scene.image_id}.png"
        mask_file = f"masks/{scene.image_id}.png"
        save_gray_image(scene.image, root / image_file)
        save_mask(scene.mask, root / mask_file)
        entries.append(SceneEntry(image_id=scene.image_id, patient_id=scene.patient_id,
                                  image_file=image_file, mask_file=mask_file))
    manifest = SceneManifest(scenes=entries)
    (root / SCENES_MANIFEST).write_text(
        json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return root


def read_scenes(root: PathLike) -> List[LabeledImage]:
    """
    Load labelled images listed in root/scenes.json. User-supplied images
    go through the same layout.

    Raises:
        ArchiveError: missing or invalid manifest
        FileNotFoundError / ImageFormatError: unreadable rasters
    """
    root = Path(root)
    path = root / SCENES_MANIFEST
    if not path.is_file():
        raise ArchiveError(f"Missing scene manifest: {path}")
    try:
        manifest = SceneManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise ArchiveError(f"Invalid scene manifest {path}: {exc}") from exc
    return [
        LabeledImage(
            image=load_gray_image(root / entry.image_file),
            mask=load_mask(root / entry.mask_file),
            patient_id=entry.patient_id,
            image_id=entry.image_id,
        )
        for entry in manifest.scenes
    ]
