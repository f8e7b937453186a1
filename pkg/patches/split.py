"""
Patient-disjoint train/test split and fold partition.

Patients are taken in order of first appearance: the first
train_patient_count of them go to train, the rest to test. The train
indices are then cut into fold_count contiguous blocks whose sizes differ
by at most one.
"""
import logging
from typing import Dict, List, Sequence

import numpy as np

from common.errors import ArgumentError
from common.rng import derive_rng
from .types import DatasetSplit, PatchRecord

logger = logging.getLogger(__name__)


def fold_partition(count: int, fold_count: int) -> List[List[int]]:
    """Contiguous blocks of range(count), earlier blocks one larger on remainder."""
    if fold_count < 1:
        raise ArgumentError(f"fold_count must be >= 1, got {fold_count}")
    if count < fold_count:
        raise ArgumentError(f"Cannot cut {count} train patches into {fold_count} folds")
    return [block.tolist() for block in np.array_split(np.arange(count), fold_count)]


def build_split(
    patches: Sequence[PatchRecord],
    train_patient_count: int,
    fold_count: int,
    seed: int = 0,
    shuffle: bool = False,
) -> DatasetSplit:
    """
    Split patches by patient and partition the train part into folds.

    With shuffle=True the train patches are permuted (seeded) before the
    fold cut; the test set keeps input order either way.

    Raises:
        ArgumentError: no patches, or train_patient_count not below the
            number of distinct patients
    """
    if not patches:
        raise ArgumentError("Cannot split an empty patch list")
    patients: Dict[str, None] = dict.fromkeys(p.patient_id for p in patches)
    if train_patient_count < 1 or train_patient_count >= len(patients):
        raise ArgumentError(
            f"train_patient_count must be in [1, {len(patients) - 1}], got {train_patient_count}"
        )

    train_ids = set(list(patients)[:train_patient_count])
    train = [p for p in patches if p.patient_id in train_ids]
    test = [p for p in patches if p.patient_id not in train_ids]
    if shuffle:
        order = derive_rng(seed, "split").permutation(len(train))
        train = [train[i] for i in order]

    split = DatasetSplit(
        train_patches=train,
        test_patches=test,
        folds=fold_partition(len(train), fold_count),
        seed=seed,
    )
    logger.info(
        "Built dataset split",
        extra={
            "train_patients": train_patient_count,
            "test_patients": len(patients) - train_patient_count,
            "train_patches": len(train),
            "test_patches": len(test),
            "folds": [len(f) for f in split.folds],
        },
    )
    return split
