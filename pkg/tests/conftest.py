"""
Shared fixtures: tiny synthetic scenes, a patch split built from them,
hand-made separable patches for training, and an isolated results ledger.
"""
from typing import List

import numpy as np
import pytest

from database.engine import configure_engine
from imaging import GrayImage, MaskImage
from patches import ClassTag, ExtractionParams, PatchRecord, build_split, extract_many
from services.results import results_service
from synthetic import SyntheticSceneSpec, generate_scene


@pytest.fixture
def tiny_spec() -> SyntheticSceneSpec:
    return SyntheticSceneSpec(image_size=64, patient_count=3, images_per_patient=1,
                              tumor_count_range=(1, 1), tumor_axis_range=(6, 9), seed=11)


@pytest.fixture
def tiny_scenes(tiny_spec):
    return generate_scene(tiny_spec)


@pytest.fixture
def tiny_params() -> ExtractionParams:
    return ExtractionParams(patch_size=16, h_ppi=3, nh_ppi=3)


@pytest.fixture
def tiny_split(tiny_scenes, tiny_params):
    results = extract_many(tiny_scenes, tiny_params, seed=5)
    patches = [p for r in results for p in r.patches]
    return build_split(patches, train_patient_count=2, fold_count=2, seed=5)


def square_patch(index: int, size: int = 16, tumor: bool = True, patient: str = "P001") -> PatchRecord:
    """Dark field with a bright square whose corner moves with index."""
    image = np.full((size, size), 0.2)
    mask = np.zeros((size, size), dtype=np.uint8)
    if tumor:
        offset = index % (size // 2)
        image[offset:offset + size // 2, offset:offset + size // 2] = 0.9
        mask[offset:offset + size // 2, offset:offset + size // 2] = 1
    return PatchRecord(
        image=GrayImage(image),
        mask=MaskImage(mask),
        patient_id=patient,
        source_image_id=f"{patient}-I01",
        origin=(index, 0),
        class_tag=ClassTag.NON_HEALTHY if tumor else ClassTag.HEALTHY,
    )


@pytest.fixture
def square_patches() -> List[PatchRecord]:
    return [square_patch(i, tumor=i % 3 != 2) for i in range(6)]


@pytest.fixture
def ledger(tmp_path, monkeypatch):
    """Results ledger and run directories under tmp_path."""
    monkeypatch.setenv("LUPISEG_RUNS_DIR", str(tmp_path / "runs"))
    monkeypatch.setenv("LUPISEG_WORKERS", "1")
    monkeypatch.delenv("LUPISEG_DATABASE_URL", raising=False)
    configure_engine(f"sqlite:///{tmp_path / 'runs' / 'ledger.db'}")
    results_service.reset()
    yield results_service
    results_service.reset()
