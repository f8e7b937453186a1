"""
LupiSeg Patch Pipeline

Turns full labelled images into the two training datasets:

- extraction:  randomized, validity-gated square patches (student data)
- enhancement: 3-channel privileged versions of those patches (teacher data)
- split:       patient-disjoint train/test sets and CV folds
- archive:     on-disk patch archive with a provenance manifest

Quick Start:
    from patches import ExtractionParams, extract_many, build_split

    results = extract_many(scenes, ExtractionParams(patch_size=64), seed=7)
    patches = [p for r in results for p in r.patches]
    split = build_split(patches, train_patient_count=8, fold_count=4)
"""
from .types import (
    ClassTag,
    ExtractionParams,
    PatchRecord,
    EnhancedPatch,
    DatasetSplit,
    ExtractionResult,
)
from .extraction import mass_area_ratio, breast_area_ratio, extract_patches, extract_many
from .enhancement import enhance_patch, build_teacher_dataset, pair_datasets
from .split import build_split, fold_partition
from .archive import (
    write_archive,
    read_archive,
    archive_params,
    write_enhanced,
    read_enhanced,
    has_enhanced,
)

__all__ = [
    "ClassTag",
    "ExtractionParams",
    "PatchRecord",
    "EnhancedPatch",
    "DatasetSplit",
    "ExtractionResult",
    "mass_area_ratio",
    "breast_area_ratio",
    "extract_patches",
    "extract_many",
    "enhance_patch",
    "build_teacher_dataset",
    "pair_datasets",
    "build_split",
    "fold_partition",
    "write_archive",
    "read_archive",
    "archive_params",
    "write_enhanced",
    "read_enhanced",
    "has_enhanced",
]
