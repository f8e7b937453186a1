import math

import numpy as np
import pytest

from common.errors import ArgumentError, DegenerateVarianceError
from nncore import (
    ComputationRecord,
    Tensor,
    batch_norm,
    concat,
    conv2d,
    cross_entropy,
    grad_check,
    max_pool2d,
    no_grad,
    one_hot_mask,
    relu,
    softmax,
    transposed_conv2d,
)


def conv_oracle(x, w, b, padding):
    n, c, h, wd = x.shape
    f, _, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    out_h, out_w = h + 2 * padding - k + 1, wd + 2 * padding - k + 1
    out = np.zeros((n, f, out_h, out_w))
    for i in range(n):
        for o in range(f):
            for r in range(out_h):
                for s in range(out_w):
                    total = b[o]
                    for ch in range(c):
                        for u in range(k):
                            for v in range(k):
                                total += xp[i, ch, r + u, s + v] * w[o, ch, u, v]
                    out[i, o, r, s] = total
    return out


def random_probs(rng, shape):
    raw = rng.random(shape) + 0.05
    return raw / raw.sum(axis=1, keepdims=True)


@pytest.mark.parametrize("padding", [0, 1])
def test_conv2d_matches_nested_loops(padding):
    rng = np.random.default_rng(0)
    x, w, b = rng.normal(size=(1, 2, 5, 5)), rng.normal(size=(3, 2, 3, 3)), rng.normal(size=3)
    out = conv2d(Tensor(x), Tensor(w), Tensor(b), padding=padding)
    np.testing.assert_allclose(out.data, conv_oracle(x, w, b, padding), atol=1e-12)


def test_conv2d_random_shapes_match_oracle():
    rng = np.random.default_rng(1)
    for _ in range(10):
        h, wd = int(rng.integers(3, 9)), int(rng.integers(3, 9))
        c, f = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        k = int(rng.choice([1, 3]))
        x, w, b = rng.normal(size=(2, c, h, wd)), rng.normal(size=(f, c, k, k)), rng.normal(size=f)
        padding = k // 2
        out = conv2d(Tensor(x), Tensor(w), Tensor(b), padding=padding)
        np.testing.assert_allclose(out.data, conv_oracle(x, w, b, padding), atol=1e-10)


def test_conv2d_channel_mismatch():
    with pytest.raises(ArgumentError):
        conv2d(Tensor(np.zeros((1, 2, 4, 4))), Tensor(np.zeros((1, 3, 3, 3))))


def test_batch_norm_train_matches_statistics_and_updates_buffers():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(4, 2, 3, 3))
    running_mean, running_var = np.zeros(2), np.ones(2)
    out = batch_norm(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)), running_mean, running_var, training=True)
    mean = x.mean(axis=(0, 2, 3))
    var = x.var(axis=(0, 2, 3))
    expected = (x - mean[None, :, None, None]) / np.sqrt(var[None, :, None, None] + 1e-5)
    np.testing.assert_allclose(out.data, expected, atol=1e-10)
    np.testing.assert_allclose(running_mean, 0.1 * mean, atol=1e-12)
    np.testing.assert_allclose(running_var, 0.9 + 0.1 * x.var(axis=(0, 2, 3), ddof=1), atol=1e-12)


def test_batch_norm_eval_uses_running_buffers():
    x = np.full((1, 1, 2, 2), 3.0)
    out = batch_norm(Tensor(x), Tensor(np.ones(1)), Tensor(np.zeros(1)), np.array([1.0]), np.array([4.0]),
                     training=False)
    np.testing.assert_allclose(out.data, (3.0 - 1.0) / np.sqrt(4.0 + 1e-5))


def test_batch_norm_single_value_is_degenerate():
    with pytest.raises(DegenerateVarianceError):
        batch_norm(Tensor(np.ones((1, 1, 1, 1))), Tensor(np.ones(1)), Tensor(np.zeros(1)),
                   np.zeros(1), np.ones(1), training=True)


def test_max_pool_and_odd_dims():
    x = np.arange(16, dtype=float).reshape(1, 1, 4, 4)
    np.testing.assert_array_equal(max_pool2d(Tensor(x)).data[0, 0], [[5, 7], [13, 15]])
    with pytest.raises(ArgumentError):
        max_pool2d(Tensor(np.zeros((1, 1, 3, 4))))


def test_transposed_conv_shape_and_values():
    x = np.ones((1, 1, 2, 2))
    w = np.arange(4, dtype=float).reshape(1, 1, 2, 2)
    out = transposed_conv2d(Tensor(x), Tensor(w), Tensor(np.array([1.0])))
    assert out.shape == (1, 1, 4, 4)
    np.testing.assert_array_equal(out.data[0, 0, :2, :2], w[0, 0] + 1.0)
    np.testing.assert_array_equal(out.data[0, 0, 2:, 2:], w[0, 0] + 1.0)


def test_softmax_sums_to_one():
    rng = np.random.default_rng(3)
    probs = softmax(Tensor(rng.normal(size=(2, 2, 3, 3)) * 50)).data
    np.testing.assert_allclose(probs.sum(axis=1), 1.0)


def test_cross_entropy_uniform_is_ln2():
    probs = Tensor(np.full((2, 2, 3, 3), 0.5))
    target = one_hot_mask(np.random.default_rng(4).integers(0, 2, size=(2, 3, 3)))
    assert cross_entropy(probs, target).item() == pytest.approx(math.log(2), abs=1e-12)


def test_cross_entropy_soft_targets_match_hand_sum():
    rng = np.random.default_rng(5)
    p, t = random_probs(rng, (1, 2, 2, 2)), random_probs(rng, (1, 2, 2, 2))
    expected = -sum(t.ravel()[i] * math.log(p.ravel()[i]) for i in range(p.size)) / 4
    assert cross_entropy(Tensor(p), t).item() == pytest.approx(expected, abs=1e-12)


def test_cross_entropy_clamps_zero_probability():
    probs = Tensor(np.stack([np.zeros((1, 1)), np.ones((1, 1))])[None])
    value = cross_entropy(probs, one_hot_mask(np.zeros((1, 1, 1)))).item()
    assert value == pytest.approx(-math.log(1e-12))


def test_one_hot_order_is_healthy_then_tumor():
    onehot = one_hot_mask(np.array([[[0, 1]]]))
    np.testing.assert_array_equal(onehot[0, :, 0, 0], [1, 0])
    np.testing.assert_array_equal(onehot[0, :, 0, 1], [0, 1])


def test_no_grad_records_nothing():
    w = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        out = (w * 2.0).sum()
    assert out.is_leaf
    assert not out.requires_grad


def test_record_is_topological_and_gradients_accumulate():
    a = Tensor(np.array([2.0]), requires_grad=True)
    b = a * a
    c = (b + a).sum()
    record = ComputationRecord.trace(c)
    position = {node.node_id: i for i, node in enumerate(record.nodes)}
    for entry in record.entries:
        assert all(position[i] < position[entry.output_id] for i in entry.input_ids)
    c.backward()
    np.testing.assert_allclose(a.grad, [5.0])


# Gradient checks, 25 random trials per operator

TRIALS = range(25)


@pytest.mark.parametrize("trial", TRIALS)
def test_grad_conv2d(trial):
    rng = np.random.default_rng(1000 + trial)
    x, w, b = (Tensor(rng.normal(size=s)) for s in [(2, 2, 4, 4), (3, 2, 3, 3), (3,)])
    weights = rng.normal(size=(2, 3, 4, 4))
    assert grad_check(lambda x, w, b: (conv2d(x, w, b, padding=1) * weights).sum(), [x, w, b]) < 1e-4


@pytest.mark.parametrize("trial", TRIALS)
def test_grad_batch_norm_train(trial):
    rng = np.random.default_rng(2000 + trial)
    x, g, b = Tensor(rng.normal(size=(3, 2, 2, 2))), Tensor(rng.normal(size=2)), Tensor(rng.normal(size=2))
    weights = rng.normal(size=(3, 2, 2, 2))

    def fn(x, g, b):
        out = batch_norm(x, g, b, np.zeros(2), np.ones(2), training=True)
        return (out * weights).sum()

    assert grad_check(fn, [x, g, b]) < 1e-4


@pytest.mark.parametrize("trial", TRIALS)
def test_grad_max_pool_relu_concat(trial):
    rng = np.random.default_rng(3000 + trial)
    x, y = Tensor(rng.normal(size=(1, 2, 4, 4))), Tensor(rng.normal(size=(1, 1, 2, 2)))
    weights = rng.normal(size=(1, 3, 2, 2))
    fn = lambda x, y: (concat([relu(max_pool2d(x)), y]) * weights).sum()  # noqa: E731
    assert grad_check(fn, [x, y]) < 1e-4


@pytest.mark.parametrize("trial", TRIALS)
def test_grad_transposed_conv(trial):
    rng = np.random.default_rng(4000 + trial)
    x, w, b = (Tensor(rng.normal(size=s)) for s in [(2, 3, 2, 2), (3, 2, 2, 2), (2,)])
    weights = rng.normal(size=(2, 2, 4, 4))
    assert grad_check(lambda x, w, b: (transposed_conv2d(x, w, b) * weights).sum(), [x, w, b]) < 1e-4


@pytest.mark.parametrize("trial", TRIALS)
def test_grad_softmax_cross_entropy_conv(trial):
    rng = np.random.default_rng(5000 + trial)
    x, w = Tensor(rng.normal(size=(2, 1, 4, 4))), Tensor(rng.normal(size=(2, 1, 3, 3)))
    target = random_probs(rng, (2, 2, 4, 4))
    fn = lambda x, w: cross_entropy(softmax(conv2d(x, w, padding=1)), target)  # noqa: E731
    assert grad_check(fn, [x, w]) < 1e-4
