"""
Training configuration and results.
"""
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from segmentation import UNetModel


class TrainConfig(BaseModel):
    """
    Hyperparameters of one training run.

    alpha only matters for the privileged-information student: it weighs
    the ground-truth term against the teacher term of the loss.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha: float = Field(0.6, ge=0.0, le=1.0)
    epochs: int = Field(10, ge=1)
    batch_size: int = Field(8, ge=1)
    learning_rate: float = Field(1e-3, gt=0.0)
    optimizer: Literal["adam", "sgd-momentum"] = "adam"
    seed: int = 0
    precision: Literal["float32", "float64"] = "float32"
    base_width: int = Field(16, ge=1)
    max_steps: Optional[int] = Field(None, ge=1)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    betas: Tuple[float, float] = (0.9, 0.999)
    adam_eps: float = Field(1e-8, gt=0.0)


class EpochRecord(BaseModel):
    """One line of training history."""
    model_config = ConfigDict(extra="forbid")

    model_label: str
    epoch: int
    steps: int
    train_loss: float
    val_f1: Optional[float] = None
    wall_time: float


@dataclass
class TrainedModel:
    model: UNetModel
    config: TrainConfig
    label: str
    history: List[EpochRecord] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return self.history[-1].steps if self.history else 0

    @property
    def final_val_f1(self) -> Optional[float]:
        return self.history[-1].val_f1 if self.history else None
