import math

import numpy as np
import pytest

from common.errors import ArgumentError
from evaluation import confidence_interval_95, confusion_counts, f1_score, summarize
from imaging import MaskImage


def brute_force_f1(preds, truths):
    tp = fp = fn = 0
    for p, t in zip(preds, truths):
        for a, b in zip(p.labels.ravel(), t.labels.ravel()):
            tp += int(a == 1 and b == 1)
            fp += int(a == 1 and b == 0)
            fn += int(a == 0 and b == 1)
    return 1.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)


def test_known_confusion_counts():
    truth = np.zeros((4, 4), dtype=np.uint8)
    pred = np.zeros((4, 4), dtype=np.uint8)
    truth.flat[[0, 1, 2, 3, 4]] = 1
    pred.flat[[0, 1, 2, 8]] = 1
    assert confusion_counts(MaskImage(pred), MaskImage(truth)) == (3, 1, 2)
    assert f1_score([MaskImage(pred)], [MaskImage(truth)]) == pytest.approx(6 / 9)


def test_micro_f1_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(50):
        count = int(rng.integers(1, 5))
        preds = [MaskImage(rng.integers(0, 2, size=(16, 16))) for _ in range(count)]
        truths = [MaskImage(rng.integers(0, 2, size=(16, 16))) for _ in range(count)]
        assert f1_score(preds, truths) == brute_force_f1(preds, truths)


def test_single_pair_f1_matches_brute_force_on_1000_pairs():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        density = rng.uniform(0.0, 0.3)
        pred = MaskImage((rng.random((16, 16)) < density).astype(np.uint8))
        truth = MaskImage((rng.random((16, 16)) < density).astype(np.uint8))
        assert f1_score([pred], [truth]) == brute_force_f1([pred], [truth])
        assert f1_score([pred], [truth], "macro") == brute_force_f1([pred], [truth])


def test_empty_masks_score_one():
    empty = MaskImage.zeros(4, 4)
    assert f1_score([empty], [empty]) == 1.0
    assert f1_score([empty], [empty], aggregation="macro") == 1.0


def test_macro_averages_per_mask():
    full, empty = MaskImage(np.ones((2, 2), dtype=np.uint8)), MaskImage.zeros(2, 2)
    assert f1_score([full, empty], [full, full], aggregation="macro") == pytest.approx(0.5)
    assert f1_score([full, empty], [full, full], aggregation="micro") == pytest.approx(8 / 12)


def test_mismatched_inputs():
    with pytest.raises(ArgumentError):
        f1_score([MaskImage.zeros(2, 2)], [])
    with pytest.raises(ArgumentError):
        f1_score([MaskImage.zeros(2, 2)], [MaskImage.zeros(2, 3)])


def test_two_sample_interval():
    mean, half_width = confidence_interval_95([0.5, 0.7])
    assert mean == pytest.approx(0.6)
    assert half_width == pytest.approx(12.7062047 * (math.sqrt(0.02) / math.sqrt(2)), abs=1e-6)
    assert half_width == pytest.approx(1.2706, abs=1e-4)


def test_five_sample_interval_uses_t_4():
    samples = [0.61, 0.64, 0.58, 0.66, 0.6]
    _, half_width = confidence_interval_95(samples)
    expected = 2.7764451 * np.std(samples, ddof=1) / math.sqrt(5)
    assert half_width == pytest.approx(expected, abs=1e-6)


def test_identical_samples_have_zero_width():
    assert confidence_interval_95([0.3, 0.3, 0.3]) == (pytest.approx(0.3), 0.0)


def test_interval_needs_two_samples():
    with pytest.raises(ArgumentError):
        confidence_interval_95([0.4])
    assert summarize([0.4]) == (0.4, None)
