"""
Patch Archive

On-disk layout:

    root/
        train/
            images/000000.png ...
            masks/000000.png ...
            manifest.json        (entries, params snapshot, seed, folds)
        test/
            images/ masks/ manifest.json
        enhanced/                (optional, written by write_enhanced)
            train/000000.npy ...
            test/000000.npy ...

The manifest is the source of truth for provenance. read_archive checks
every entry against its files and raises ArchiveError on any disagreement.
"""
import json
import logging
import shutil
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from common.errors import ArchiveError, ImageFormatError
from imaging import GrayImage, load_gray_image, load_mask, save_gray_image, save_mask
from .types import ClassTag, DatasetSplit, EnhancedPatch, ExtractionParams, PatchRecord

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SPLITS = ("train", "test")
MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1


class ManifestEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    index: int
    image_file: str
    mask_file: str
    patient_id: str
    source_image_id: str
    origin: Tuple[int, int]
    class_tag: ClassTag
    tumor_pixels: int


class SplitManifest(BaseModel):
    """Provenance for one split directory."""
    model_config = ConfigDict(extra="forbid")

    version: int = MANIFEST_VERSION
    split: str
    seed: int
    params: ExtractionParams
    entries: List[ManifestEntry]
    folds: Optional[List[List[int]]] = None


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_split(directory: Path, name: str, patches: List[PatchRecord],
                 params: ExtractionParams, seed: int, folds=None) -> None:
    entries = []
    for index, patch in enumerate(patches):
        stem = f"{index:06d}.png"
        save_gray_image(patch.image, directory / "images" / stem)
        save_mask(patch.mask, directory / "masks" / stem)
        entries.append(ManifestEntry(
            index=index,
            image_file=f"images/{stem}",
            mask_file=f"masks/{stem}",
            patient_id=patch.patient_id,
            source_image_id=patch.source_image_id,
            origin=patch.origin,
            class_tag=patch.class_tag,
            tumor_pixels=patch.mask.tumor_pixels(),
        ))
    manifest = SplitManifest(split=name, seed=seed, params=params, entries=entries, folds=folds)
    _write_json(directory / MANIFEST_NAME, manifest.model_dump(mode="json"))


def write_archive(split: DatasetSplit, root: PathLike, params: ExtractionParams, seed: int) -> Path:
    """
    Write both halves of a split under root; returns root.

    Any previous split directories and enhanced stacks under root are
    removed first, so the archive never mixes two extractions.
    """
    root = Path(root)
    stale = root / "enhanced"
    if stale.exists():
        shutil.rmtree(stale)
        logger.info("Removed enhanced stacks of the previous archive", extra={"root": str(root)})
    for name in SPLITS:
        directory = root / name
        for sub in ("images", "masks"):
            if (directory / sub).exists():
                shutil.rmtree(directory / sub)
        (directory / "images").mkdir(parents=True, exist_ok=True)
        (directory / "masks").mkdir(parents=True, exist_ok=True)
    _write_split(root / "train", "train", split.train_patches, params, seed, folds=split.folds)
    _write_split(root / "test", "test", split.test_patches, params, seed)
    logger.info(
        "Wrote patch archive",
        extra={"root": str(root), "train": len(split.train_patches), "test": len(split.test_patches)},
    )
    return root


def read_manifest(root: PathLike, name: str) -> SplitManifest:
    path = Path(root) / name / MANIFEST_NAME
    if not path.is_file():
        raise ArchiveError(f"Missing manifest: {path}")
    try:
        return SplitManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise ArchiveError(f"Invalid manifest {path}: {exc}") from exc


def _read_split(root: Path, name: str) -> Tuple[SplitManifest, List[PatchRecord]]:
    manifest = read_manifest(root, name)
    directory = root / name
    size = manifest.params.patch_size
    patches = []
    for position, entry in enumerate(manifest.entries):
        where = f"{name} entry {entry.index}"
        if entry.index != position:
            raise ArchiveError(f"{where}: out of order (expected index {position})")
        try:
            image = load_gray_image(directory / entry.image_file)
            mask = load_mask(directory / entry.mask_file)
        except (OSError, ImageFormatError) as exc:
            raise ArchiveError(f"{where}: {exc}") from exc
        if image.shape != (size, size) or mask.shape != (size, size):
            raise ArchiveError(f"{where}: expected {size}x{size}, got {image.shape} / {mask.shape}")
        if mask.tumor_pixels() != entry.tumor_pixels:
            raise ArchiveError(
                f"{where}: mask has {mask.tumor_pixels()} tumor pixels, manifest says {entry.tumor_pixels}"
            )
        if entry.class_tag is ClassTag.HEALTHY and entry.tumor_pixels:
            raise ArchiveError(f"{where}: healthy patch with tumor pixels")
        patches.append(PatchRecord(
            image=image,
            mask=mask,
            patient_id=entry.patient_id,
            source_image_id=entry.source_image_id,
            origin=entry.origin,
            class_tag=entry.class_tag,
        ))
    return manifest, patches


def read_archive(root: PathLike) -> DatasetSplit:
    """
    Rebuild the DatasetSplit stored under root.

    Raises:
        ArchiveError: missing or invalid manifest, missing files, or files
            that disagree with their manifest entries
    """
    root = Path(root)
    train_manifest, train = _read_split(root, "train")
    test_manifest, test = _read_split(root, "test")
    if train_manifest.folds is None:
        raise ArchiveError(f"{root}: train manifest has no fold partition")
    try:
        return DatasetSplit(train_patches=train, test_patches=test,
                            folds=train_manifest.folds, seed=train_manifest.seed)
    except ValueError as exc:
        raise ArchiveError(f"{root}: {exc}") from exc


def archive_params(root: PathLike) -> ExtractionParams:
    return read_manifest(root, "train").params


# =============================================================================
# ENHANCED CHANNELS
# =============================================================================

def write_enhanced(enhanced: Dict[str, List[EnhancedPatch]], root: PathLike) -> Path:
    """Store teacher channels as float64 (3, H, W) .npy stacks per split."""
    root = Path(root)
    for name, items in enhanced.items():
        directory = root / "enhanced" / name
        directory.mkdir(parents=True, exist_ok=True)
        for index, patch in enumerate(items):
            np.save(directory / f"{index:06d}.npy", patch.stack(), allow_pickle=False)
    return root / "enhanced"


def has_enhanced(root: PathLike) -> bool:
    return (Path(root) / "enhanced" / "train").is_dir()


def read_enhanced(root: PathLike, name: str, patches: List[PatchRecord]) -> List[EnhancedPatch]:
    """
    Load the stored teacher channels of one split, aligned with `patches`.

    Raises:
        ArchiveError: a stack is missing, has the wrong shape, or its
            channel 0 is not the patch it is paired with
    """
    directory = Path(root) / "enhanced" / name
    enhanced = []
    for index, patch in enumerate(patches):
        path = directory / f"{index:06d}.npy"
        if not path.is_file():
            raise ArchiveError(f"Missing enhanced stack: {path}")
        stack = np.load(path, allow_pickle=False)
        if stack.shape != (3,) + patch.image.shape:
            raise ArchiveError(f"{path}: shape {stack.shape} does not match patch {patch.image.shape}")
        if not np.array_equal(stack[0], patch.image.data):
            raise ArchiveError(f"{path}: channel 0 differs from the archived patch; rerun enhance")
        depth = patch.image.source_bit_depth
        channels = tuple(GrayImage(stack[c], depth) for c in range(3))
        enhanced.append(EnhancedPatch(channels=channels, mask=patch.mask))
    return enhanced
