"""
Epoch Log Model

One row per training epoch, mirroring the structured log line.

Log Format: HH:MM:SS-YYYY-MM-DD - model - epoch N - loss L - val_f1 F - T s
Example:
    - 14:02:11-2026-03-01 - pi-0.6 - epoch 3 - loss 0.2113 - val_f1 0.871 - 41.2 s
"""
from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String
from sqlalchemy.orm import relationship
from sqlalchemy.sql import func

from database.engine import Base


class EpochLog(Base):
    __tablename__ = "epoch_logs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("experiment_runs.id"), nullable=False, index=True)
    model_label = Column(String, nullable=False)
    epoch = Column(Integer, nullable=False)
    train_loss = Column(Float, nullable=False)
    val_f1 = Column(Float, nullable=True)
    wall_time = Column(Float, nullable=False)
    timestamp = Column(DateTime(timezone=True), server_default=func.now())

    run = relationship("ExperimentRun", back_populates="epochs")

    def __repr__(self):
        return f"<EpochLog(run_id={self.run_id}, model={self.model_label}, epoch={self.epoch})>"

    def format(self) -> str:
        """
        Format log entry as: HH:MM:SS-YYYY-MM-DD - model - epoch N - loss L - val_f1 F - T s
        """
        ts = self.timestamp.strftime("%H:%M:%S-%Y-%m-%d") if self.timestamp else "--:--:---"
        val = f"{self.val_f1:.3f}" if self.val_f1 is not None else "n/a"
        return (
            f"{ts} - {self.model_label} - epoch {self.epoch} - loss {self.train_loss:.4f}"
            f" - val_f1 {val} - {self.wall_time:.1f} s"
        )
