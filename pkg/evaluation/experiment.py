"""
Experiment Harness

One experiment cell = (training fold, sample range). For each repetition
seed the cell:

1. takes the sample range (1-based, inclusive) of the chosen training fold
2. shuffles it with the repetition seed and cuts it into cv_folds blocks
3. for every CV fold trains the teacher, the baseline student and one PI
   student per alpha on the other blocks, monitoring F1 on the held-out block
4. scores every variant on the full test set, reducing the CV models with
   cv_selection (best validation F1, average, or last fold)

Variants of one CV fold share the same training seed, so the student and
the PI students differ only by their loss.

A map is a list of cells; run_map runs them over a process pool and joins
the rows in map order.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from common.errors import ArgumentError, ExperimentAbortedError, LupiSegError
from common.rng import derive_rng, derive_seed
from imaging import MaskImage
from patches import DatasetSplit, EnhancedPatch, build_teacher_dataset
from segmentation import predict_masks
from training import TrainConfig, TrainedModel, model_inputs, train_pi_student, train_student, train_teacher
from .metrics import f1_score, summarize

logger = logging.getLogger(__name__)

CvSelection = Literal["best", "average", "last"]
F1Aggregation = Literal["micro", "macro"]

TEACHER = "teacher"
STUDENT = "student"


def pi_variant(alpha: float) -> str:
    return f"pi-{alpha:g}"


def is_competitor(variant: str) -> bool:
    """Variants that compete for the best marker (the teacher does not)."""
    return variant == STUDENT or variant.startswith("pi-")


# =============================================================================
# TYPES
# =============================================================================

class ExperimentSpec(BaseModel):
    """One cell of the experimentation map."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment_id: str
    training_fold: int = Field(ge=1)
    sample_range: Tuple[int, int]
    repetitions: int = Field(5, ge=1)
    alphas: List[float] = [0.8, 0.6, 0.4]
    cv_folds: int = Field(5, ge=2)
    seeds: List[int] = []
    cv_selection: CvSelection = "best"
    f1_aggregation: F1Aggregation = "micro"

    @model_validator(mode="after")
    def _check(self) -> "ExperimentSpec":
        start, end = self.sample_range
        if start < 1 or end < start:
            raise ValueError(f"sample_range must satisfy 1 <= start <= end, got {self.sample_range}")
        if any(not 0.0 <= a <= 1.0 for a in self.alphas):
            raise ValueError(f"alphas must lie in [0, 1], got {self.alphas}")
        if self.seeds and len(self.seeds) != self.repetitions:
            raise ValueError(f"{len(self.seeds)} seeds for {self.repetitions} repetitions")
        return self

    @property
    def repetition_seeds(self) -> List[int]:
        return list(self.seeds) or [derive_seed(0, self.experiment_id, r) for r in range(1, self.repetitions + 1)]

    @property
    def variants(self) -> List[str]:
        return [TEACHER, STUDENT] + [pi_variant(a) for a in self.alphas]


class ExperimentMapConfig(BaseModel):
    """The grid of cells; defaults reproduce the 16-cell map."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    training_folds: List[int] = [1, 2, 3, 4]
    sample_ranges: List[Tuple[int, int]] = [(1, 400), (1, 600), (1, 800), (1, 1000)]
    repetitions: int = Field(5, ge=1)
    alphas: List[float] = [0.8, 0.6, 0.4]
    cv_folds: int = Field(5, ge=2)
    cv_selection: CvSelection = "best"
    f1_aggregation: F1Aggregation = "micro"
    seed: int = 0

    def repetition_seeds(self) -> List[int]:
        return [derive_seed(self.seed, "repetition", r) for r in range(1, self.repetitions + 1)]


class RepetitionResult(BaseModel):
    """Test F1 of one variant in one repetition of one cell."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment_id: str
    training_fold: int
    sample_range: Tuple[int, int]
    variant: str
    repetition: int
    seed: int
    f1: float


class VariantStats(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    variant: str
    mean_f1: float
    ci_half_width: Optional[float] = None
    samples: List[float]


class MetricsRow(BaseModel):
    """
    Aggregated result of one cell. Means and half-widths are reported
    unclipped, even when mean +/- half-width leaves [0, 1].
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment_id: str
    training_fold: int
    sample_range: Tuple[int, int]
    repetitions: int
    variants: List[VariantStats]

    def variant(self, name: str) -> VariantStats:
        for stats in self.variants:
            if stats.variant == name:
                return stats
        raise KeyError(name)

    @property
    def variant_names(self) -> List[str]:
        return [s.variant for s in self.variants]


def build_experiment_map(config: ExperimentMapConfig) -> List[ExperimentSpec]:
    """Cells E1..En, fold-major then range order."""
    seeds = config.repetition_seeds()
    specs = []
    for fold in config.training_folds:
        for sample_range in config.sample_ranges:
            specs.append(ExperimentSpec(
                experiment_id=f"E{len(specs) + 1}",
                training_fold=fold,
                sample_range=sample_range,
                repetitions=config.repetitions,
                alphas=config.alphas,
                cv_folds=config.cv_folds,
                seeds=seeds,
                cv_selection=config.cv_selection,
                f1_aggregation=config.f1_aggregation,
            ))
    return specs


def aggregate_rows(results: Sequence[RepetitionResult]) -> List[MetricsRow]:
    """
    Reduce repetition results to one MetricsRow per cell.

    Cells and variants keep their order of first appearance; samples are
    ordered by repetition.
    """
    cells: Dict[str, List[RepetitionResult]] = {}
    for result in results:
        cells.setdefault(result.experiment_id, []).append(result)
    rows = []
    for experiment_id, items in cells.items():
        by_variant: Dict[str, List[RepetitionResult]] = {}
        for item in items:
            by_variant.setdefault(item.variant, []).append(item)
        variants = []
        for name, entries in by_variant.items():
            samples = [e.f1 for e in sorted(entries, key=lambda e: e.repetition)]
            mean, half_width = summarize(samples)
            variants.append(VariantStats(variant=name, mean_f1=mean, ci_half_width=half_width, samples=samples))
        first = items[0]
        rows.append(MetricsRow(
            experiment_id=experiment_id,
            training_fold=first.training_fold,
            sample_range=first.sample_range,
            repetitions=len({i.repetition for i in items}),
            variants=variants,
        ))
    return rows


# =============================================================================
# TRAINING BACKEND
# =============================================================================

class UNetBackend:
    """Trains and scores real UNet models; tests may substitute a lighter one."""

    def train_teacher(self, dataset, config: TrainConfig, validation=None) -> TrainedModel:
        return train_teacher(dataset, config, validation=validation)

    def train_student(self, dataset, config: TrainConfig, validation=None) -> TrainedModel:
        return train_student(dataset, config, validation=validation)

    def train_pi_student(self, pairs, teacher: TrainedModel, config: TrainConfig, validation=None) -> TrainedModel:
        return train_pi_student(pairs, teacher, config, validation=validation)

    def predict(self, trained: TrainedModel, items: Sequence) -> List[MaskImage]:
        return predict_masks(trained.model, model_inputs(items))


# =============================================================================
# RUNNER
# =============================================================================

def _select(cv_scores: List[Tuple[Optional[float], float]], policy: CvSelection) -> float:
    """Reduce (validation F1, test F1) per CV fold to one test F1."""
    if policy == "last":
        return cv_scores[-1][1]
    if policy == "average":
        return float(np.mean([test for _, test in cv_scores]))
    best = max(range(len(cv_scores)), key=lambda i: (cv_scores[i][0] if cv_scores[i][0] is not None else -1.0, -i))
    return cv_scores[best][1]


def _cell_subset(spec: ExperimentSpec, split: DatasetSplit) -> List[int]:
    if spec.training_fold > len(split.folds):
        raise ArgumentError(f"{spec.experiment_id}: fold {spec.training_fold} but the split has {len(split.folds)}")
    fold = split.folds[spec.training_fold - 1]
    start, end = spec.sample_range
    if end > len(fold):
        raise ArgumentError(f"{spec.experiment_id}: range {start}-{end} exceeds fold size {len(fold)}")
    subset = fold[start - 1:end]
    if len(subset) < spec.cv_folds:
        raise ArgumentError(f"{spec.experiment_id}: {len(subset)} samples cannot fill {spec.cv_folds} CV folds")
    return subset


def run_experiment(
    spec: ExperimentSpec,
    split: DatasetSplit,
    train_config: Optional[TrainConfig] = None,
    backend: Optional[UNetBackend] = None,
    enhanced_train: Optional[List[EnhancedPatch]] = None,
    enhanced_test: Optional[List[EnhancedPatch]] = None,
) -> MetricsRow:
    """
    Run every repetition of one cell and aggregate it.

    enhanced_train / enhanced_test, when given, must be index-aligned with
    split.train_patches / split.test_patches; otherwise the teacher
    channels are computed here.

    Raises:
        ArgumentError: empty test set, or a range outside the fold
        ExperimentAbortedError: a training run failed; carries the
            repetition results finished so far
    """
    if not split.test_patches:
        raise ArgumentError("The split has no test patches")
    train_config = train_config or TrainConfig()
    backend = backend or UNetBackend()
    subset = _cell_subset(spec, split)

    raw_cell = [split.train_patches[i] for i in subset]
    enh_cell = [enhanced_train[i] for i in subset] if enhanced_train is not None else build_teacher_dataset(raw_cell)
    test_raw = split.test_patches
    test_enh = enhanced_test if enhanced_test is not None else build_teacher_dataset(test_raw)
    truth = [p.mask for p in test_raw]

    def test_f1(trained: TrainedModel, items: Sequence) -> float:
        return f1_score(backend.predict(trained, items), truth, spec.f1_aggregation)

    results: List[RepetitionResult] = []
    for repetition, rep_seed in enumerate(spec.repetition_seeds, start=1):
        order = derive_rng(rep_seed, "cv").permutation(len(subset))
        blocks = np.array_split(order, spec.cv_folds)
        scores: Dict[str, List[Tuple[Optional[float], float]]] = {v: [] for v in spec.variants}
        try:
            for k, held_out in enumerate(blocks):
                fit = np.concatenate([b for j, b in enumerate(blocks) if j != k])
                raw_fit = [raw_cell[i] for i in fit]
                enh_fit = [enh_cell[i] for i in fit]
                raw_val = [raw_cell[i] for i in held_out]
                enh_val = [enh_cell[i] for i in held_out]
                config = train_config.model_copy(update={"seed": derive_seed(rep_seed, "cv-fold", k)})

                teacher = backend.train_teacher(enh_fit, config, validation=enh_val)
                scores[TEACHER].append((teacher.final_val_f1, test_f1(teacher, test_enh)))
                student = backend.train_student(raw_fit, config, validation=raw_val)
                scores[STUDENT].append((student.final_val_f1, test_f1(student, test_raw)))
                for alpha in spec.alphas:
                    pi = backend.train_pi_student(
                        list(zip(raw_fit, enh_fit)), teacher,
                        config.model_copy(update={"alpha": alpha}), validation=raw_val,
                    )
                    scores[pi_variant(alpha)].append((pi.final_val_f1, test_f1(pi, test_raw)))
        except (LupiSegError, ArithmeticError) as exc:
            logger.error(
                "Experiment aborted",
                extra={"experiment_id": spec.experiment_id, "repetition": repetition, "error": str(exc)},
            )
            raise ExperimentAbortedError(
                f"{spec.experiment_id} repetition {repetition}: {exc}", partial_results=results, cause=exc,
            ) from exc

        for variant in spec.variants:
            results.append(RepetitionResult(
                experiment_id=spec.experiment_id,
                training_fold=spec.training_fold,
                sample_range=spec.sample_range,
                variant=variant,
                repetition=repetition,
                seed=rep_seed,
                f1=_select(scores[variant], spec.cv_selection),
            ))
        logger.info(
            "Repetition complete",
            extra={"experiment_id": spec.experiment_id, "repetition": repetition,
                   "f1": {r.variant: r.f1 for r in results[-len(spec.variants):]}},
        )
    return aggregate_rows(results)[0]


def _experiment_job(args: tuple) -> MetricsRow:
    return run_experiment(*args)


def run_map(
    specs: Sequence[ExperimentSpec],
    split: DatasetSplit,
    train_config: Optional[TrainConfig] = None,
    workers: Optional[int] = 1,
    backend: Optional[UNetBackend] = None,
    enhanced_train: Optional[List[EnhancedPatch]] = None,
    enhanced_test: Optional[List[EnhancedPatch]] = None,
) -> List[MetricsRow]:
    """
    Run every cell, one pool job per cell, rows in spec order.

    Raises:
        ExperimentAbortedError: one or more cells failed; partial_results
            holds the rows of finished cells plus whatever the failed
            cells completed
    """
    if enhanced_train is None:
        enhanced_train = build_teacher_dataset(split.train_patches)
    if enhanced_test is None:
        enhanced_test = build_teacher_dataset(split.test_patches)
    jobs = [(spec, split, train_config, backend, enhanced_train, enhanced_test) for spec in specs]

    rows: List[MetricsRow] = []
    failures: List[ExperimentAbortedError] = []

    def collect(outcome) -> None:
        try:
            rows.append(outcome())
        except ExperimentAbortedError as exc:
            failures.append(exc)
            rows.extend(aggregate_rows(exc.partial_results))

    if not workers or workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            collect(lambda job=job: _experiment_job(job))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_experiment_job, job) for job in jobs]
            for future in futures:
                collect(future.result)

    if failures:
        message = f"{len(failures)} cell(s) aborted: {'; '.join(str(f) for f in failures)}"
        cause = failures[0].cause
        raise ExperimentAbortedError(message, partial_results=rows, cause=cause) from cause
    logger.info("Map complete", extra={"cells": len(rows)})
    return rows
