"""
Results Ledger Service

Persists what the CLI produces so any past run can be inspected or
re-reported:

- ExperimentRun:     one per results-producing command
- RepetitionResult:  test F1 per (cell, variant, repetition)
- EpochLog:          one line per training epoch

USAGE EXAMPLE:
==============
from services.results import results_service

run_id = results_service.start_run("run-map", config_hash, seeds, run_dir)
results_service.record_rows(run_id, rows, seeds)
results_service.finish_run(run_id, RunStatus.COMPLETED)

rows = results_service.load_rows(run_id)
"""
import logging
from typing import List, Optional, Sequence, Union

from sqlalchemy import desc, select

from database.engine import get_db_session, init_db
from database.models import EpochLog, ExperimentRun, RepetitionResult, RunStatus
from evaluation.experiment import MetricsRow, RepetitionResult as RepetitionRecord, aggregate_rows
from training import EpochRecord

logger = logging.getLogger(__name__)


class ResultsService:
    """Reads and writes the results ledger."""

    def __init__(self):
        self._ready = False

    def _session(self):
        if not self._ready:
            init_db()
            self._ready = True
        return get_db_session()

    def reset(self) -> None:
        """Forget table creation (after the engine was re-pointed)."""
        self._ready = False

    # =========================================================================
    # RUNS
    # =========================================================================

    def start_run(self, command: str, config_hash: str, seeds: Sequence[int], run_dir: str) -> int:
        with self._session() as db:
            run = ExperimentRun(command=command, config_hash=config_hash, seeds=list(seeds),
                                run_dir=str(run_dir), status=RunStatus.RUNNING.value)
            db.add(run)
            db.commit()
            db.refresh(run)
            logger.info("Run started", extra={"run_id": run.id, "command": command, "config_hash": config_hash})
            return run.id

    def finish_run(self, run_id: int, status: Union[str, RunStatus]) -> None:
        if isinstance(status, RunStatus):
            status = status.value
        with self._session() as db:
            run = db.get(ExperimentRun, run_id)
            if run is None:
                raise KeyError(f"No run with id {run_id}")
            run.status = status
            db.commit()

    def get_run(self, run_id: int) -> Optional[ExperimentRun]:
        with self._session() as db:
            return db.get(ExperimentRun, run_id)

    def recent_runs(self, limit: int = 25) -> List[ExperimentRun]:
        with self._session() as db:
            result = db.execute(select(ExperimentRun).order_by(desc(ExperimentRun.id)).limit(limit))
            return list(result.scalars().all())

    # =========================================================================
    # RESULTS
    # =========================================================================

    def record_rows(self, run_id: int, rows: Sequence[MetricsRow], seeds: Sequence[int] = ()) -> int:
        """Store every repetition sample of the rows; returns the count."""
        count = 0
        with self._session() as db:
            for row in rows:
                for stats in row.variants:
                    for repetition, sample in enumerate(stats.samples, start=1):
                        db.add(RepetitionResult(
                            run_id=run_id,
                            experiment_id=row.experiment_id,
                            training_fold=row.training_fold,
                            range_start=row.sample_range[0],
                            range_end=row.sample_range[1],
                            variant=stats.variant,
                            repetition=repetition,
                            seed=seeds[repetition - 1] if repetition <= len(seeds) else 0,
                            f1=float(sample),
                        ))
                        count += 1
            db.commit()
        return count

    def load_rows(self, run_id: int) -> List[MetricsRow]:
        """Rebuild the MetricsRows of a stored run."""
        with self._session() as db:
            stored = db.execute(
                select(RepetitionResult).where(RepetitionResult.run_id == run_id).order_by(RepetitionResult.id)
            ).scalars().all()
            records = [
                RepetitionRecord(
                    experiment_id=r.experiment_id,
                    training_fold=r.training_fold,
                    sample_range=(r.range_start, r.range_end),
                    variant=r.variant,
                    repetition=r.repetition,
                    seed=r.seed,
                    f1=r.f1,
                )
                for r in stored
            ]
        return aggregate_rows(records)

    # =========================================================================
    # EPOCH LOGS
    # =========================================================================

    def record_epoch(self, run_id: int, record: EpochRecord) -> EpochLog:
        with self._session() as db:
            entry = EpochLog(
                run_id=run_id,
                model_label=record.model_label,
                epoch=record.epoch,
                train_loss=record.train_loss,
                val_f1=record.val_f1,
                wall_time=record.wall_time,
            )
            db.add(entry)
            db.commit()
            db.refresh(entry)
            return entry

    def epoch_lines(self, run_id: int) -> List[str]:
        with self._session() as db:
            entries = db.execute(
                select(EpochLog).where(EpochLog.run_id == run_id).order_by(EpochLog.id)
            ).scalars().all()
            return [entry.format() for entry in entries]


# Global instance
results_service = ResultsService()
