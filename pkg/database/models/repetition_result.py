"""
Repetition Result Model

Test-set F1 of one model variant in one repetition of one experiment
cell. MetricsRows are rebuilt from these rows, so a stored run can be
re-reported at any time.
"""
from sqlalchemy import Column, Float, ForeignKey, Integer, String
from sqlalchemy.orm import relationship

from database.engine import Base


class RepetitionResult(Base):
    __tablename__ = "repetition_results"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("experiment_runs.id"), nullable=False, index=True)
    experiment_id = Column(String, nullable=False)
    training_fold = Column(Integer, nullable=False)
    range_start = Column(Integer, nullable=False)
    range_end = Column(Integer, nullable=False)
    variant = Column(String, nullable=False)
    repetition = Column(Integer, nullable=False)
    seed = Column(Integer, nullable=False)
    f1 = Column(Float, nullable=False)

    run = relationship("ExperimentRun", back_populates="repetitions")

    def __repr__(self):
        return f"<RepetitionResult({self.experiment_id}, {self.variant}, rep={self.repetition}, f1={self.f1:.3f})>"
