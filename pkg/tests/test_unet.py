import numpy as np
import pytest

from common.errors import ArgumentError, ChannelMismatchError, CheckpointError
from nncore import Tensor, cross_entropy, grad_check, one_hot_mask
from segmentation import (
    UNetConfig,
    buffer_shapes,
    forward,
    init_model,
    load_model,
    parameter_shapes,
    predict_masks,
    save_model,
)


def test_output_is_two_class_probabilities():
    model = init_model(UNetConfig(in_channels=1, base_width=4), seed=0)
    x = np.random.default_rng(0).random((2, 1, 16, 16))
    probs = forward(model, x, mode="eval").data
    assert probs.shape == (2, 2, 16, 16)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0)


def test_parameter_layout():
    shapes = parameter_shapes(UNetConfig(in_channels=3, base_width=16))
    assert shapes["down1.conv1.weight"] == (16, 3, 3, 3)
    assert shapes["down3.conv2.weight"] == (64, 64, 3, 3)
    assert shapes["up1.tconv.weight"] == (64, 64, 2, 2)
    assert shapes["up1.conv1.weight"] == (64, 128, 3, 3)
    assert shapes["up3.conv1.weight"] == (16, 32, 3, 3)
    assert shapes["head.weight"] == (2, 16, 1, 1)
    assert len(buffer_shapes(UNetConfig())) == 2 * 12


def test_init_is_deterministic():
    first = init_model(UNetConfig(base_width=4), seed=3)
    second = init_model(UNetConfig(base_width=4), seed=3)
    other = init_model(UNetConfig(base_width=4), seed=4)
    for name, array in first.state_arrays().items():
        assert array.tobytes() == second.state_arrays()[name].tobytes()
    assert first.params["head.weight"].data.tobytes() != other.params["head.weight"].data.tobytes()


def test_teacher_and_student_differ_only_in_first_conv():
    student = init_model(UNetConfig(in_channels=1, base_width=4), seed=7)
    teacher = init_model(UNetConfig(in_channels=3, base_width=4), seed=7)
    for name, param in student.params.items():
        if name == "down1.conv1.weight":
            assert param.shape != teacher.params[name].shape
        else:
            assert param.data.tobytes() == teacher.params[name].data.tobytes(), name


def test_student_rejects_three_channels():
    model = init_model(UNetConfig(in_channels=1, base_width=4), seed=0)
    with pytest.raises(ChannelMismatchError):
        forward(model, np.zeros((1, 3, 16, 16)))


def test_spatial_dims_must_divide_by_eight():
    model = init_model(UNetConfig(base_width=4), seed=0)
    with pytest.raises(ArgumentError):
        forward(model, np.zeros((1, 1, 12, 12)))


def test_ties_predict_healthy():
    model = init_model(UNetConfig(base_width=4), seed=0)
    model.params["head.weight"].data[...] = 0.0
    model.params["head.bias"].data[...] = 0.0
    (mask,) = predict_masks(model, np.random.default_rng(1).random((1, 1, 16, 16)))
    assert mask.tumor_pixels() == 0


def test_eval_forward_leaves_buffers_alone():
    model = init_model(UNetConfig(base_width=4), seed=0)
    before = {n: b.copy() for n, b in model.buffers.items()}
    forward(model, np.ones((1, 1, 16, 16)), mode="eval")
    for name, buffer in model.buffers.items():
        np.testing.assert_array_equal(buffer, before[name])


def test_frozen_copy_records_nothing_and_spares_the_original():
    model = init_model(UNetConfig(base_width=4), seed=0)
    frozen = model.copy().freeze()
    out = forward(frozen, np.ones((1, 1, 16, 16)), mode="train")
    assert not out.requires_grad
    assert all(not p.requires_grad and p.grad is None for p in frozen.params.values())
    assert all(p.requires_grad for p in model.params.values())


def test_checkpoint_round_trip(tmp_path):
    model = init_model(UNetConfig(in_channels=3, base_width=4), seed=2, precision="float32")
    forward(model, np.random.default_rng(0).random((2, 3, 16, 16)), mode="train")
    path = save_model(model, tmp_path / "teacher.ckpt")
    loaded = load_model(path)
    assert loaded.config == model.config
    assert loaded.precision == "float32"
    x = np.random.default_rng(1).random((1, 3, 16, 16))
    np.testing.assert_array_equal(forward(loaded, x).data, forward(model, x).data)
    assert save_model(loaded, tmp_path / "again.ckpt").read_bytes() == path.read_bytes()


def test_truncated_model_checkpoint(tmp_path):
    path = save_model(init_model(UNetConfig(base_width=4), seed=0), tmp_path / "m.ckpt")
    path.write_bytes(path.read_bytes()[:-16])
    with pytest.raises(CheckpointError):
        load_model(path)


def test_full_forward_gradient():
    model = init_model(UNetConfig(in_channels=1, base_width=2), seed=5, precision="float64")
    rng = np.random.default_rng(6)
    x = Tensor(rng.random((1, 1, 16, 16)))
    target = one_hot_mask(rng.integers(0, 2, size=(1, 16, 16)))
    names = ["down1.conv1.weight", "down3.bn2.gamma", "up1.tconv.weight", "up3.conv2.weight", "head.weight"]
    checked = [model.params[n] for n in names]

    def loss(*_):
        return cross_entropy(forward(model, x, mode="train"), target)

    assert grad_check(loss, checked, step=1e-6, max_elements=4, seed=0) < 1e-3
