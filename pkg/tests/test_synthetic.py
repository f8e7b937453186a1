import math

import numpy as np
import pytest
from pydantic import ValidationError

from common.errors import ArchiveError
from synthetic import SyntheticSceneSpec, ellipse_mask, generate_scene, read_scenes, write_scenes


def test_ellipse_area_matches_pi_r_squared():
    mask = ellipse_mask((128, 128), (64.0, 64.0), (20.0, 20.0), 0.0)
    assert mask.sum() == pytest.approx(math.pi * 20 * 20, rel=0.02)


def test_rotated_ellipse_area():
    mask = ellipse_mask((128, 128), (60.0, 70.0), (30.0, 12.0), 0.7)
    assert mask.sum() == pytest.approx(math.pi * 30 * 12, rel=0.02)


def test_scene_ids_and_patient_blocks(tiny_spec):
    scenes = generate_scene(tiny_spec.model_copy(update={"images_per_patient": 2}))
    assert [s.image_id for s in scenes[:3]] == ["P001-I01", "P001-I02", "P002-I01"]
    assert [s.patient_id for s in scenes] == ["P001", "P001", "P002", "P002", "P003", "P003"]


def test_tumors_lie_inside_the_breast(tiny_scenes, tiny_spec):
    for scene in tiny_scenes:
        tumor = scene.mask.labels.astype(bool)
        assert tumor.any()
        assert np.all(scene.image.data[tumor] > tiny_spec.tissue_intensity)
        assert scene.image.data.min() >= 0.0


def test_generation_is_seed_deterministic(tiny_spec):
    first, second = generate_scene(tiny_spec), generate_scene(tiny_spec)
    other = generate_scene(tiny_spec.model_copy(update={"seed": tiny_spec.seed + 1}))
    assert all(a.image == b.image and a.mask == b.mask for a, b in zip(first, second))
    assert any(a.image != b.image for a, b in zip(first, other))


@pytest.mark.parametrize("texture", ["gradient", "speckle"])
def test_textures_render(tiny_spec, texture):
    scenes = generate_scene(tiny_spec.model_copy(update={"background_texture": texture}))
    assert len(scenes) == tiny_spec.patient_count


def test_scene_files_round_trip(tmp_path, tiny_scenes):
    root = write_scenes(tiny_scenes, tmp_path / "scenes")
    loaded = read_scenes(root)
    assert [s.image_id for s in loaded] == [s.image_id for s in tiny_scenes]
    assert all(a.image == b.image and a.mask == b.mask for a, b in zip(loaded, tiny_scenes))


def test_missing_scene_manifest(tmp_path):
    with pytest.raises(ArchiveError):
        read_scenes(tmp_path)


def test_spec_validation():
    with pytest.raises(ValidationError):
        SyntheticSceneSpec(image_size=64, tumor_axis_range=(10, 40))
    with pytest.raises(ValidationError):
        SyntheticSceneSpec(unknown=1)
