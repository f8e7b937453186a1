"""
LupiSeg Database Models

All models are imported here for easy access and to ensure they're registered
with SQLAlchemy's metadata for table creation.

Usage:
    from database.models import ExperimentRun, RepetitionResult, EpochLog
    from database.models.experiment_run import RunStatus
"""
from .experiment_run import ExperimentRun, RunStatus
from .repetition_result import RepetitionResult
from .epoch_log import EpochLog

__all__ = [
    # Models
    "ExperimentRun",
    "RepetitionResult",
    "EpochLog",
    # Enums
    "RunStatus",
]
