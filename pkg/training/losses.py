"""
Segmentation losses.

    student_loss = CE(S(x), y)
    pi_loss      = alpha * CE(S(x), y) + (1 - alpha) * CE(S(x), T(x_bar))

alpha = 1 is the plain student loss, alpha = 0 is pure distillation from
the teacher's soft predictions.
"""
from typing import Union

import numpy as np

from common.errors import ArgumentError
from nncore import Tensor, cross_entropy

Target = Union[Tensor, np.ndarray]


def _constant(t: Target) -> np.ndarray:
    return t.data if isinstance(t, Tensor) else np.asarray(t)


def student_loss(student_probs: Tensor, target_onehot: Target) -> Tensor:
    return cross_entropy(student_probs, _constant(target_onehot))


def pi_loss(student_probs: Tensor, teacher_probs: Target, target_onehot: Target, alpha: float) -> Tensor:
    """
    Blend of ground-truth and teacher cross entropies.

    Teacher probabilities are taken as constants; no gradient reaches the
    teacher.

    Raises:
        ArgumentError: alpha outside [0, 1] or shape mismatch
    """
    if not 0.0 <= alpha <= 1.0:
        raise ArgumentError(f"alpha must lie in [0, 1], got {alpha}")
    teacher = _constant(teacher_probs)
    truth = _constant(target_onehot)
    if teacher.shape != student_probs.shape or truth.shape != student_probs.shape:
        raise ArgumentError(
            f"pi_loss shapes differ: student {student_probs.shape}, teacher {teacher.shape}, target {truth.shape}"
        )
    return cross_entropy(student_probs, truth) * alpha + cross_entropy(student_probs, teacher) * (1.0 - alpha)
