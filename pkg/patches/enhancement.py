"""
Privileged channel construction.

The teacher sees every patch as three stacked channels:
[original, histogram-equalized, contrast-adjusted]. The student only ever
sees channel 0, so pairing the two datasets means checking that channel 0
is byte-identical to the raw patch.
"""
import logging
import warnings
from typing import List, Sequence, Tuple

from common.errors import DegenerateStretchWarning, PairingError
from imaging import adjust_contrast, histogram_equalize
from .types import EnhancedPatch, PatchRecord

logger = logging.getLogger(__name__)


def enhance_patch(p: PatchRecord) -> EnhancedPatch:
    """Build the 3-channel privileged version of a patch."""
    return EnhancedPatch(
        channels=(p.image, histogram_equalize(p.image), adjust_contrast(p.image)),
        mask=p.mask,
    )


def build_teacher_dataset(patches: Sequence[PatchRecord]) -> List[EnhancedPatch]:
    """
    Enhance every patch, keeping index alignment with the input.

    Degenerate stretches are expected on flat crops; they are counted and
    logged once instead of warning per patch.
    """
    enhanced = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateStretchWarning)
        for patch in patches:
            enhanced.append(enhance_patch(patch))
    degenerate = sum(1 for w in caught if issubclass(w.category, DegenerateStretchWarning))
    if degenerate:
        logger.info("Degenerate contrast stretches", extra={"count": degenerate, "patches": len(patches)})
    return enhanced


def pair_datasets(
    patches: Sequence[PatchRecord],
    enhanced: Sequence[EnhancedPatch],
) -> List[Tuple[PatchRecord, EnhancedPatch]]:
    """
    Zip the student and teacher datasets.

    Raises:
        PairingError: lengths differ, or a pair's channel 0 or mask does not
            match the raw patch
    """
    if len(patches) != len(enhanced):
        raise PairingError(f"{len(patches)} raw patches but {len(enhanced)} enhanced patches")
    pairs = []
    for index, (raw, rich) in enumerate(zip(patches, enhanced)):
        if rich.channels[0] != raw.image:
            raise PairingError(f"Pair {index}: channel 0 differs from the raw patch ({raw.source_image_id})")
        if rich.mask != raw.mask:
            raise PairingError(f"Pair {index}: masks differ ({raw.source_image_id})")
        pairs.append((raw, rich))
    return pairs
