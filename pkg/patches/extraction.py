"""
Randomized Patch Extraction

For every source image we try to locate h_ppi healthy and nh_ppi
non-healthy square patches by rejection sampling:

    healthy     - zero tumor pixels, breast_area_ratio >= bar
    non-healthy - mass_area_ratio >= mar (and at least one tumor pixel),
                  breast_area_ratio >= bar

Every patch lies fully inside the image and no origin is used twice per
image. Each class gets max_attempts_per_patch x requested draws; whatever
could not be found is reported as a shortfall instead of failing.

Candidates are scored with summed-area tables, so one draw costs O(1)
regardless of patch size.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np

from common.errors import ArgumentError
from common.rng import derive_rng
from imaging import GrayImage, LabeledImage, MaskImage
from .types import ClassTag, ExtractionParams, ExtractionResult, PatchRecord

logger = logging.getLogger(__name__)


def mass_area_ratio(mask: MaskImage) -> float:
    """Fraction of pixels labelled tumor."""
    total = mask.labels.size
    if total == 0:
        return 0.0
    return mask.tumor_pixels() / total


def breast_area_ratio(img: GrayImage, background_threshold: float = 0.02) -> float:
    """Fraction of pixels brighter than the background threshold."""
    total = img.data.size
    if total == 0:
        return 0.0
    return int(np.count_nonzero(img.data > background_threshold)) / total


class _WindowCounter:
    """Counts of a binary map over square windows via a summed-area table."""

    def __init__(self, binary: np.ndarray):
        table = np.zeros((binary.shape[0] + 1, binary.shape[1] + 1), dtype=np.int64)
        table[1:, 1:] = np.cumsum(np.cumsum(binary, axis=0, dtype=np.int64), axis=1)
        self._table = table

    def count(self, x: int, y: int, size: int) -> int:
        t = self._table
        return int(t[y + size, x + size] - t[y, x + size] - t[y + size, x] + t[y, x])


def extract_patches(
    img: GrayImage,
    mask: MaskImage,
    params: ExtractionParams,
    seed: int,
    patient_id: str = "patient-0",
    image_id: str = "image-0",
) -> ExtractionResult:
    """
    Extract up to h_ppi healthy and nh_ppi non-healthy patches from one image.

    The random stream is derived from (seed, image_id), so equal inputs,
    params and seed give identical output.

    Raises:
        ArgumentError: image/mask dimensions differ or are below patch_size
    """
    if img.shape != mask.shape:
        raise ArgumentError(f"Image {img.shape} and mask {mask.shape} differ")
    size = params.patch_size
    if img.height < size or img.width < size:
        raise ArgumentError(f"Image {img.width}x{img.height} is smaller than patch_size {size}")

    rng = derive_rng(seed, image_id)
    area = size * size
    max_x = img.width - size
    max_y = img.height - size
    tumor = _WindowCounter(mask.labels)
    tissue = _WindowCounter(img.data > params.background_threshold)
    used: Set[Tuple[int, int]] = set()

    def breast_ok(x: int, y: int) -> bool:
        return tissue.count(x, y, size) / area >= params.bar

    def make(x: int, y: int, tag: ClassTag) -> PatchRecord:
        used.add((x, y))
        return PatchRecord(
            image=img.crop(x, y, size),
            mask=mask.crop(x, y, size),
            patient_id=patient_id,
            source_image_id=image_id,
            origin=(x, y),
            class_tag=tag,
        )

    # Healthy: origins uniform over all in-bounds positions
    healthy: List[PatchRecord] = []
    budget = params.max_attempts_per_patch * params.h_ppi
    for _ in range(budget):
        if len(healthy) >= params.h_ppi:
            break
        x = int(rng.integers(0, max_x + 1))
        y = int(rng.integers(0, max_y + 1))
        if (x, y) in used or tumor.count(x, y, size) != 0 or not breast_ok(x, y):
            continue
        healthy.append(make(x, y, ClassTag.HEALTHY))

    # Non-healthy: crops anchored on a random tumor pixel
    non_healthy: List[PatchRecord] = []
    tumor_rows, tumor_cols = np.nonzero(mask.labels)
    if tumor_rows.size:
        budget = params.max_attempts_per_patch * params.nh_ppi
        for _ in range(budget):
            if len(non_healthy) >= params.nh_ppi:
                break
            pick = int(rng.integers(0, tumor_rows.size))
            x = int(np.clip(tumor_cols[pick] - rng.integers(0, size), 0, max_x))
            y = int(np.clip(tumor_rows[pick] - rng.integers(0, size), 0, max_y))
            if (x, y) in used:
                continue
            count = tumor.count(x, y, size)
            if count == 0 or count / area < params.mar or not breast_ok(x, y):
                continue
            non_healthy.append(make(x, y, ClassTag.NON_HEALTHY))

    result = ExtractionResult(
        patches=healthy + non_healthy,
        shortfall_healthy=params.h_ppi - len(healthy),
        shortfall_non_healthy=params.nh_ppi - len(non_healthy),
    )
    if result.shortfall:
        logger.warning(
            "Patch shortfall",
            extra={"image_id": image_id, "patient_id": patient_id, **result.report()},
        )
    return result


def _extract_job(args: tuple) -> ExtractionResult:
    source, params, seed = args
    return extract_patches(source.image, source.mask, params, seed, source.patient_id, source.image_id)


def extract_many(
    sources: Sequence[LabeledImage],
    params: ExtractionParams,
    seed: int,
    workers: Optional[int] = 1,
) -> List[ExtractionResult]:
    """
    Extract patches from many images, optionally across a process pool.

    Results come back in input order; each image has its own random stream,
    so the output does not depend on the number of workers.
    """
    jobs = [(source, params, seed) for source in sources]
    if not workers or workers <= 1 or len(jobs) <= 1:
        return [_extract_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_extract_job, jobs))
