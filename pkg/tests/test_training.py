import numpy as np
import pytest

from common.errors import ArgumentError, NumericError, PairingError
from evaluation import f1_score
from nncore import cross_entropy
from patches import ExtractionParams, build_split, build_teacher_dataset, extract_many
from segmentation import UNetModel, predict_masks
from synthetic import SyntheticSceneSpec, generate_scene
from training import TrainConfig, model_inputs, train_pi_student, train_student, train_teacher
import training.trainer as trainer


def config(**overrides) -> TrainConfig:
    base = dict(epochs=3, batch_size=3, learning_rate=1e-2, base_width=4, precision="float64", seed=1)
    base.update(overrides)
    return TrainConfig(**base)


def state_bytes(trained):
    return {name: array.tobytes() for name, array in trained.model.state_arrays().items()}


def test_student_loss_decreases(square_patches):
    trained = train_student(square_patches, config(epochs=15, batch_size=6))
    assert trained.history[-1].train_loss < trained.history[0].train_loss
    assert trained.steps == 15


def test_training_is_deterministic(square_patches):
    first = train_student(square_patches, config())
    second = train_student(square_patches, config())
    assert state_bytes(first) == state_bytes(second)
    assert [r.train_loss for r in first.history] == [r.train_loss for r in second.history]


def test_alpha_one_reproduces_the_student_bit_for_bit(square_patches):
    enhanced = build_teacher_dataset(square_patches)
    teacher = train_teacher(enhanced, config(epochs=1))
    student = train_student(square_patches, config())
    pi = train_pi_student(list(zip(square_patches, enhanced)), teacher, config(alpha=1.0))
    assert pi.label == "pi-1"
    assert state_bytes(pi) == state_bytes(student)


def test_pi_training_leaves_the_teacher_untouched(square_patches):
    enhanced = build_teacher_dataset(square_patches)
    teacher = train_teacher(enhanced, config(epochs=1))
    before = state_bytes(teacher)
    pi = train_pi_student(list(zip(square_patches, enhanced)), teacher, config(alpha=0.4))
    assert state_bytes(teacher) == before
    assert pi.label == "pi-0.4"
    assert pi.model.in_channels == 1


def test_pi_training_runs_a_frozen_teacher(square_patches, monkeypatch):
    enhanced = build_teacher_dataset(square_patches)
    teacher = train_teacher(enhanced, config(epochs=1))
    frozen = []
    original_freeze = UNetModel.freeze

    def recording_freeze(model):
        frozen.append(original_freeze(model))
        return frozen[-1]

    monkeypatch.setattr(UNetModel, "freeze", recording_freeze)
    train_pi_student(list(zip(square_patches, enhanced)), teacher, config(alpha=0.5, epochs=1))
    assert len(frozen) == 1
    assert frozen[0] is not teacher.model
    assert all(not p.requires_grad for p in frozen[0].params.values())
    assert all(p.requires_grad for p in teacher.model.params.values())


def test_pi_rejects_misaligned_pairs(square_patches):
    enhanced = build_teacher_dataset(square_patches)
    teacher = train_teacher(enhanced, config(epochs=1, max_steps=1))
    with pytest.raises(PairingError):
        train_pi_student(list(zip(square_patches, enhanced[1:] + enhanced[:1])), teacher, config())


def test_max_steps_and_epoch_callback(square_patches):
    seen = []
    trained = train_student(square_patches, config(epochs=5, batch_size=2, max_steps=4), on_epoch=seen.append)
    assert trained.steps == 4
    assert [r.epoch for r in seen] == [1, 2]
    assert seen == trained.history


def test_validation_f1_is_recorded(square_patches):
    trained = train_student(square_patches[:4], config(epochs=1), validation=square_patches[4:])
    assert 0.0 <= trained.final_val_f1 <= 1.0


def test_non_finite_loss_raises(square_patches, monkeypatch):
    monkeypatch.setattr(trainer, "student_loss", lambda probs, target: cross_entropy(probs, target) * np.nan)
    with pytest.raises(NumericError):
        train_student(square_patches, config())


def test_empty_dataset_rejected():
    with pytest.raises(ArgumentError):
        train_student([], config())


@pytest.mark.parametrize("optimizer", ["adam", "sgd-momentum"])
@pytest.mark.parametrize("mode", ["teacher", "student", "pi"])
def test_every_step_moves_some_parameter(square_patches, monkeypatch, mode, optimizer):
    enhanced = build_teacher_dataset(square_patches)
    teacher = train_teacher(enhanced, config(epochs=1)) if mode == "pi" else None
    moved = []
    make_optimizer = trainer.make_optimizer

    def recording_optimizer(name, params, lr, **kwargs):
        wrapped = make_optimizer(name, params, lr, **kwargs)
        step = wrapped.step

        def checked_step():
            before = [p.data.copy() for p in params.values()]
            step()
            moved.append(any(not np.array_equal(b, p.data) for b, p in zip(before, params.values())))

        wrapped.step = checked_step
        return wrapped

    monkeypatch.setattr(trainer, "make_optimizer", recording_optimizer)
    run = config(epochs=2, optimizer=optimizer)
    if mode == "teacher":
        train_teacher(enhanced, run)
    elif mode == "student":
        train_student(square_patches, run)
    else:
        train_pi_student(list(zip(square_patches, enhanced)), teacher, run)
    assert len(moved) == 4
    assert all(moved)


@pytest.mark.slow
def test_desk_scale_models_learn_the_separable_task():
    scenes = generate_scene(SyntheticSceneSpec(image_size=256, patient_count=6, seed=3))
    params = ExtractionParams(patch_size=64, h_ppi=8, nh_ppi=8)
    patches = [p for r in extract_many(scenes, params, seed=3) for p in r.patches]
    split = build_split(patches, train_patient_count=4, fold_count=1, seed=3)
    train_config = TrainConfig(epochs=100, max_steps=200, base_width=16, seed=3)
    truth = [p.mask for p in split.test_patches]

    student = train_student(split.train_patches, train_config)
    assert f1_score(predict_masks(student.model, model_inputs(split.test_patches)), truth) >= 0.85

    teacher = train_teacher(build_teacher_dataset(split.train_patches), train_config)
    test_enhanced = build_teacher_dataset(split.test_patches)
    assert f1_score(predict_masks(teacher.model, model_inputs(test_enhanced)), truth) >= 0.85
