import numpy as np
import pytest

from common.errors import ArgumentError, DegenerateStretchWarning, ImageFormatError
from imaging import (
    GrayImage,
    MaskImage,
    adjust_contrast,
    histogram_equalize,
    load_gray_image,
    load_mask,
    save_gray_image,
    save_mask,
)


def brute_force_equalize(data: np.ndarray, bins: int = 256) -> np.ndarray:
    flat = data.ravel()
    index = [min(int(v * bins), bins - 1) for v in flat]
    out = np.empty(flat.size)
    for i, b in enumerate(index):
        out[i] = sum(1 for other in index if other <= b) / flat.size
    return out.reshape(data.shape)


def test_gray_image_rejects_out_of_range():
    with pytest.raises(ArgumentError):
        GrayImage(np.array([[0.0, 1.5]]))
    with pytest.raises(ArgumentError):
        GrayImage(np.zeros(4))


def test_gray_image_is_read_only():
    img = GrayImage(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        img.data[0, 0] = 1.0


def test_mask_rejects_non_binary():
    with pytest.raises(ArgumentError):
        MaskImage(np.array([[0, 2]]))


@pytest.mark.parametrize("depth", [8, 16])
def test_png_round_trip_is_bit_exact(tmp_path, depth):
    rng = np.random.default_rng(0)
    scale = (1 << depth) - 1
    img = GrayImage(rng.integers(0, scale + 1, size=(9, 7)) / scale, source_bit_depth=depth)
    path = save_gray_image(img, tmp_path / f"img{depth}.png")
    loaded = load_gray_image(path)
    assert loaded.source_bit_depth == depth
    assert loaded == img


def test_pgm_round_trip(tmp_path):
    img = GrayImage(np.arange(12).reshape(3, 4) / 255.0)
    assert load_gray_image(save_gray_image(img, tmp_path / "img.pgm")) == img


def test_mask_round_trip(tmp_path):
    mask = MaskImage(np.eye(5, dtype=np.uint8))
    assert load_mask(save_mask(mask, tmp_path / "mask.png")) == mask


def test_unsupported_suffix(tmp_path):
    bad = tmp_path / "img.jpg"
    bad.write_bytes(b"not an image")
    with pytest.raises(ImageFormatError):
        load_gray_image(bad)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_gray_image(tmp_path / "missing.png")


def test_equalize_matches_brute_force_cdf():
    data = np.full((8, 8), 0.1)
    data[2:5, 3:6] = 0.85
    data[0, 0] = 0.5
    img = GrayImage(data)
    np.testing.assert_allclose(histogram_equalize(img).data, brute_force_equalize(data), atol=1e-12)


def test_equalize_constant_image_maps_to_one():
    assert np.all(histogram_equalize(GrayImage(np.full((4, 4), 0.3))).data == 1.0)


def test_equalize_is_monotone():
    rng = np.random.default_rng(1)
    data = rng.random((16, 16))
    out = histogram_equalize(GrayImage(data)).data.ravel()
    order = np.argsort(data.ravel(), kind="stable")
    assert np.all(np.diff(out[order]) >= 0)


def test_contrast_stretch_matches_percentiles():
    rng = np.random.default_rng(2)
    data = rng.random((10, 10))
    low, high = np.percentile(data, [2, 98])
    expected = np.clip((data - low) / (high - low), 0.0, 1.0)
    np.testing.assert_allclose(adjust_contrast(GrayImage(data)).data, expected, atol=1e-12)


def test_contrast_stretch_degenerate_warns_and_zeros():
    img = GrayImage(np.full((4, 4), 0.4))
    with pytest.warns(DegenerateStretchWarning):
        out = adjust_contrast(img)
    assert np.all(out.data == 0.0)


def test_contrast_stretch_rejects_bad_percentiles():
    with pytest.raises(ArgumentError):
        adjust_contrast(GrayImage(np.zeros((2, 2))), p_low=50, p_high=10)
