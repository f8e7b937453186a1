import logging

import numpy as np
import pytest

from common.errors import ArgumentError, PairingError
from imaging import GrayImage, adjust_contrast, histogram_equalize
from patches import build_teacher_dataset, enhance_patch, pair_datasets

from conftest import square_patch


def test_channels_are_raw_equalized_stretched():
    patch = square_patch(1)
    enhanced = enhance_patch(patch)
    assert enhanced.channels[0] == patch.image
    assert enhanced.channels[0].data.tobytes() == patch.image.data.tobytes()
    assert enhanced.channels[1] == histogram_equalize(patch.image)
    assert enhanced.channels[2] == adjust_contrast(patch.image)
    assert enhanced.mask == patch.mask
    assert enhanced.stack().shape == (3, 16, 16)


def test_flat_patch_is_enhanced_without_raising():
    flat = square_patch(0, tumor=False)
    (enhanced,) = build_teacher_dataset([flat])
    assert np.all(enhanced.channels[2].data == 0.0)


def test_degenerate_stretches_are_logged_once(caplog):
    flats = [square_patch(i, tumor=False) for i in range(4)]
    with caplog.at_level(logging.INFO, logger="patches.enhancement"):
        build_teacher_dataset(flats)
    records = [r for r in caplog.records if r.getMessage() == "Degenerate contrast stretches"]
    assert len(records) == 1
    assert records[0].count == 4
    assert not [r for r in caplog.records if r.levelno >= logging.WARNING]


def test_empty_image_cannot_be_stretched():
    with pytest.raises(ArgumentError):
        adjust_contrast(GrayImage(np.zeros((0, 0))))


def test_pairing_accepts_aligned(square_patches):
    enhanced = build_teacher_dataset(square_patches)
    pairs = pair_datasets(square_patches, enhanced)
    assert [raw for raw, _ in pairs] == square_patches


def test_pairing_rejects_shifted(square_patches):
    enhanced = build_teacher_dataset(square_patches)
    with pytest.raises(PairingError):
        pair_datasets(square_patches, enhanced[1:] + enhanced[:1])


def test_pairing_rejects_length_mismatch(square_patches):
    with pytest.raises(PairingError):
        pair_datasets(square_patches, build_teacher_dataset(square_patches[:-1]))
