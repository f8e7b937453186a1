"""
Experiment Run Model

One row per CLI invocation that produces results (train, evaluate,
run-map). Repetition results and epoch logs hang off it.
"""
from enum import Enum

from sqlalchemy import Column, DateTime, Integer, JSON, String
from sqlalchemy.orm import relationship
from sqlalchemy.sql import func

from database.engine import Base


class RunStatus(str, Enum):
    RUNNING = "running"
    COMPLETED = "completed"
    ABORTED = "aborted"
    FAILED = "failed"


class ExperimentRun(Base):
    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    command = Column(String, nullable=False)
    config_hash = Column(String(64), nullable=False, index=True)
    seeds = Column(JSON, default=list)
    run_dir = Column(String, nullable=False)
    status = Column(String, nullable=False, default=RunStatus.RUNNING.value)
    created_at = Column(DateTime(timezone=True), server_default=func.now())

    repetitions = relationship(
        "RepetitionResult", back_populates="run", cascade="all, delete-orphan", order_by="RepetitionResult.id"
    )
    epochs = relationship("EpochLog", back_populates="run", cascade="all, delete-orphan", order_by="EpochLog.id")

    def __repr__(self):
        return f"<ExperimentRun(id={self.id}, command={self.command}, hash={self.config_hash[:12]}, status={self.status})>"
