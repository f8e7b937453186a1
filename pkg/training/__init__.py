"""
LupiSeg Training Package

Teacher, baseline student and privileged-information student training.

Quick Start:
    from training import TrainConfig, train_teacher, train_pi_student

    config = TrainConfig(alpha=0.6, epochs=5, seed=3)
    teacher = train_teacher(enhanced, config)
    student = train_pi_student(list(zip(raw, enhanced)), teacher, config)
"""
from .config import TrainConfig, EpochRecord, TrainedModel
from .losses import student_loss, pi_loss
from .trainer import train_teacher, train_student, train_pi_student, validation_f1, model_inputs

__all__ = [
    "TrainConfig",
    "EpochRecord",
    "TrainedModel",
    "student_loss",
    "pi_loss",
    "train_teacher",
    "train_student",
    "train_pi_student",
    "validation_f1",
    "model_inputs",
]
