"""
Training regimes.

- train_teacher:    3-channel model on the enhanced patches
- train_student:    1-channel model on the raw patches
- train_pi_student: 1-channel model whose loss blends the ground truth
                    with the frozen teacher's soft predictions

All three share one loop: a model initialized from config.seed, a batch
order drawn from numpy.random.default_rng(config.seed), and one optimizer
step per mini-batch. Equal seeds therefore give the student and the PI
student identical initial weights and identical batch sequences.
"""
import logging
import time
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from common.errors import ArgumentError, NumericError
from evaluation.metrics import f1_score
from nncore import Tensor, make_optimizer, no_grad, one_hot_mask
from patches import EnhancedPatch, PatchRecord, pair_datasets
from segmentation import UNetConfig, UNetModel, forward, init_model, predict_masks, stack_inputs
from .config import EpochRecord, TrainConfig, TrainedModel
from .losses import pi_loss, student_loss

logger = logging.getLogger(__name__)

EpochCallback = Callable[[EpochRecord], None]
LossFn = Callable[[Tensor, np.ndarray, np.ndarray], Tensor]


def model_inputs(items: Sequence) -> np.ndarray:
    return stack_inputs([item.image if isinstance(item, PatchRecord) else item for item in items])


def _labels(items: Sequence) -> np.ndarray:
    return np.stack([item.mask.labels for item in items])


def validation_f1(model: UNetModel, items: Sequence) -> float:
    """Micro F1 of the model's predicted masks against the items' masks."""
    predicted = predict_masks(model, model_inputs(items))
    return f1_score(predicted, [item.mask for item in items])


def _fit(
    label: str,
    model: UNetModel,
    inputs: np.ndarray,
    labels: np.ndarray,
    loss_fn: LossFn,
    config: TrainConfig,
    validation: Optional[Sequence],
    on_epoch: Optional[EpochCallback],
) -> TrainedModel:
    optimizer = make_optimizer(
        config.optimizer,
        model.params,
        config.learning_rate,
        momentum=config.momentum,
        betas=config.betas,
        eps=config.adam_eps,
    )
    inputs = inputs.astype(config.precision, copy=False)
    targets = one_hot_mask(labels, dtype=config.precision)
    rng = np.random.default_rng(config.seed)
    trained = TrainedModel(model=model, config=config, label=label)
    steps = 0
    started = time.perf_counter()

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(inputs))
        losses: List[float] = []
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            optimizer.zero_grad()
            probs = forward(model, Tensor(inputs[batch]), mode="train")
            loss = loss_fn(probs, targets[batch], batch)
            value = loss.item()
            if not np.isfinite(value):
                raise NumericError(f"{label}: non-finite loss {value} at epoch {epoch}, step {steps + 1}")
            loss.backward()
            optimizer.step()
            losses.append(value)
            steps += 1
            if config.max_steps is not None and steps >= config.max_steps:
                break

        record = EpochRecord(
            model_label=label,
            epoch=epoch,
            steps=steps,
            train_loss=float(np.mean(losses)),
            val_f1=validation_f1(model, validation) if validation else None,
            wall_time=time.perf_counter() - started,
        )
        trained.history.append(record)
        logger.info("Epoch complete", extra=record.model_dump())
        if on_epoch is not None:
            on_epoch(record)
        if config.max_steps is not None and steps >= config.max_steps:
            break
    return trained


def _require_items(dataset: Sequence, what: str) -> None:
    if not dataset:
        raise ArgumentError(f"Cannot train the {what} on an empty dataset")


def train_teacher(
    dataset: Sequence[EnhancedPatch],
    config: TrainConfig,
    validation: Optional[Sequence[EnhancedPatch]] = None,
    on_epoch: Optional[EpochCallback] = None,
) -> TrainedModel:
    """Train the 3-channel teacher with plain cross entropy."""
    _require_items(dataset, "teacher")
    model = init_model(UNetConfig(in_channels=3, base_width=config.base_width), config.seed, config.precision)
    inputs = model_inputs(dataset)
    return _fit("teacher", model, inputs, _labels(dataset),
                lambda probs, target, _: student_loss(probs, target), config, validation, on_epoch)


def train_student(
    dataset: Sequence[PatchRecord],
    config: TrainConfig,
    validation: Optional[Sequence[PatchRecord]] = None,
    on_epoch: Optional[EpochCallback] = None,
) -> TrainedModel:
    """Train the 1-channel baseline student on raw patches only."""
    _require_items(dataset, "student")
    model = init_model(UNetConfig(in_channels=1, base_width=config.base_width), config.seed, config.precision)
    inputs = model_inputs(dataset)
    return _fit("student", model, inputs, _labels(dataset),
                lambda probs, target, _: student_loss(probs, target), config, validation, on_epoch)


def train_pi_student(
    dataset_pairs: Sequence[Tuple[PatchRecord, EnhancedPatch]],
    teacher: TrainedModel,
    config: TrainConfig,
    validation: Optional[Sequence[PatchRecord]] = None,
    on_epoch: Optional[EpochCallback] = None,
) -> TrainedModel:
    """
    Train a 1-channel student against the blended loss.

    The teacher is a frozen copy run in eval mode outside the differentiation
    record on the 3-channel twin of every batch; the caller's model is
    never touched.

    Raises:
        PairingError: a pair's enhanced channel 0 is not its raw patch
    """
    _require_items(dataset_pairs, "privileged-information student")
    raw = [pair[0] for pair in dataset_pairs]
    enhanced = [pair[1] for pair in dataset_pairs]
    pair_datasets(raw, enhanced)

    teacher_inputs = model_inputs(enhanced).astype(teacher.model.precision, copy=False)
    teacher_model = teacher.model.copy().freeze()
    alpha = config.alpha

    def loss_fn(probs: Tensor, target: np.ndarray, batch: np.ndarray) -> Tensor:
        with no_grad():
            soft = forward(teacher_model, teacher_inputs[batch], mode="eval").data
        return pi_loss(probs, soft, target, alpha)

    model = init_model(UNetConfig(in_channels=1, base_width=config.base_width), config.seed, config.precision)
    label = f"pi-{alpha:g}"
    return _fit(label, model, model_inputs(raw), _labels(raw), loss_fn, config, validation, on_epoch)
