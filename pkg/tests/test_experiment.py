import pickle

import pytest

from channels import exit_code_for
from common.errors import ArgumentError, ExperimentAbortedError, NumericError
from evaluation.experiment import (
    STUDENT,
    TEACHER,
    ExperimentMapConfig,
    ExperimentSpec,
    RepetitionResult,
    UNetBackend,
    aggregate_rows,
    build_experiment_map,
    pi_variant,
    run_experiment,
    run_map,
)
from imaging import MaskImage
from patches import build_split
from training import TrainConfig, TrainedModel

from conftest import square_patch


class PerfectBackend:
    """Teacher and PI students predict the truth; the student predicts nothing."""

    def __init__(self, fail_on_repetition=None):
        self.fail_on_repetition = fail_on_repetition
        self.teacher_runs = 0
        self.seeds = []

    def train_teacher(self, dataset, config, validation=None):
        self.teacher_runs += 1
        self.seeds.append(config.seed)
        return TrainedModel(model=None, config=config, label=TEACHER)

    def train_student(self, dataset, config, validation=None):
        return TrainedModel(model=None, config=config, label=STUDENT)

    def train_pi_student(self, pairs, teacher, config, validation=None):
        if self.fail_on_repetition is not None and self.teacher_runs > 2 * (self.fail_on_repetition - 1):
            raise NumericError("loss became NaN")
        return TrainedModel(model=None, config=config, label=pi_variant(config.alpha))

    def predict(self, trained, items):
        if trained.label == STUDENT:
            return [MaskImage.zeros(*item.mask.shape) for item in items]
        return [item.mask for item in items]


class DivergingBackend(PerfectBackend):
    """Every teacher run hits a non-finite loss."""

    def train_teacher(self, dataset, config, validation=None):
        raise NumericError("non-finite loss")


@pytest.fixture
def map_split():
    patches = []
    for p in range(1, 6):
        patches += [square_patch(i, patient=f"P{p:03d}") for i in range(6)]
    return build_split(patches, train_patient_count=4, fold_count=4)


def spec(**overrides):
    base = dict(experiment_id="E1", training_fold=1, sample_range=(1, 4), repetitions=2,
                alphas=[0.8, 0.4], cv_folds=2, seeds=[11, 12])
    base.update(overrides)
    return ExperimentSpec(**base)


def test_cell_scores_every_variant(map_split):
    backend = PerfectBackend()
    row = run_experiment(spec(), map_split, backend=backend)
    assert row.variant_names == ["teacher", "student", "pi-0.8", "pi-0.4"]
    assert row.repetitions == 2
    assert row.variant("student").mean_f1 == 0.0
    assert row.variant("pi-0.8").samples == [1.0, 1.0]
    assert row.variant("teacher").ci_half_width == 0.0
    assert backend.teacher_runs == 2 * 2


def test_cv_fold_seeds_follow_the_repetition_seed(map_split):
    first, second = PerfectBackend(), PerfectBackend()
    run_experiment(spec(), map_split, backend=first)
    run_experiment(spec(experiment_id="E9", training_fold=2), map_split, backend=second)
    assert first.seeds == second.seeds
    assert len(set(first.seeds)) == 4


def test_single_repetition_has_no_interval(map_split):
    row = run_experiment(spec(repetitions=1, seeds=[3]), map_split, backend=PerfectBackend())
    assert all(stats.ci_half_width is None for stats in row.variants)


def test_range_outside_fold_is_rejected(map_split):
    with pytest.raises(ArgumentError):
        run_experiment(spec(sample_range=(1, 50)), map_split, backend=PerfectBackend())


def test_failure_keeps_finished_repetitions(map_split):
    with pytest.raises(ExperimentAbortedError) as caught:
        run_experiment(spec(), map_split, backend=PerfectBackend(fail_on_repetition=2))
    partial = caught.value.partial_results
    assert {r.repetition for r in partial} == {1}
    assert len(partial) == 4
    assert isinstance(caught.value.__cause__, NumericError)


def test_default_map_has_sixteen_cells_fold_major():
    specs = build_experiment_map(ExperimentMapConfig())
    assert [s.experiment_id for s in specs] == [f"E{i}" for i in range(1, 17)]
    assert [(s.training_fold, s.sample_range) for s in specs[:5]] == [
        (1, (1, 400)), (1, (1, 600)), (1, (1, 800)), (1, (1, 1000)), (2, (1, 400)),
    ]
    assert all(s.repetition_seeds == specs[0].repetition_seeds for s in specs)
    assert len(specs[0].repetition_seeds) == 5


def test_stub_archive_runs_the_full_map(map_split):
    config = ExperimentMapConfig(sample_ranges=[(1, 2), (1, 3), (1, 4), (1, 5)], repetitions=1, cv_folds=2)
    rows = run_map(build_experiment_map(config), map_split, workers=1, backend=PerfectBackend())
    assert len(rows) == 16
    assert [r.experiment_id for r in rows] == [f"E{i}" for i in range(1, 17)]
    assert rows[5].training_fold == 2 and tuple(rows[5].sample_range) == (1, 3)


def test_map_failure_reports_finished_cells(map_split):
    specs = [spec(experiment_id="E1"), spec(experiment_id="E2", training_fold=2)]

    class FailSecondCell(PerfectBackend):
        def train_teacher(self, dataset, config, validation=None):
            if self.teacher_runs >= 4:
                raise NumericError("diverged")
            return super().train_teacher(dataset, config, validation)

    with pytest.raises(ExperimentAbortedError) as caught:
        run_map(specs, map_split, workers=1, backend=FailSecondCell())
    assert [r.experiment_id for r in caught.value.partial_results] == ["E1"]
    assert isinstance(caught.value.__cause__, NumericError)


def test_aggregate_orders_samples_by_repetition(map_split):
    row = run_experiment(spec(), map_split, backend=PerfectBackend())
    results = []
    for stats in row.variants:
        for repetition, sample in reversed(list(enumerate(stats.samples, start=1))):
            results.append(RepetitionResult(experiment_id="E1", training_fold=1, sample_range=(1, 4),
                                            variant=stats.variant, repetition=repetition, seed=0, f1=sample))
    (again,) = aggregate_rows(results)
    assert again.variant("student").samples == row.variant("student").samples


@pytest.mark.parametrize("workers", [1, 2])
def test_map_failure_keeps_its_exit_family_across_workers(map_split, workers):
    specs = [spec(experiment_id="E1"), spec(experiment_id="E2", training_fold=2)]
    with pytest.raises(ExperimentAbortedError) as caught:
        run_map(specs, map_split, workers=workers, backend=DivergingBackend())
    assert isinstance(caught.value.cause, NumericError)
    assert exit_code_for(caught.value) == 4


def test_aborted_error_pickles_its_cause():
    error = ExperimentAbortedError("E1 aborted", partial_results=[1], cause=NumericError("nan"))
    restored = pickle.loads(pickle.dumps(error))
    assert isinstance(restored.cause, NumericError)
    assert restored.partial_results == [1]
    assert exit_code_for(restored) == 4


def test_real_backend_cell_is_reproducible(tiny_split):
    cell = spec(sample_range=(1, 2), repetitions=1, alphas=[0.5], seeds=[3])
    train_config = TrainConfig(epochs=1, max_steps=1, batch_size=2, base_width=4, precision="float64")
    first = run_experiment(cell, tiny_split, train_config, backend=UNetBackend())
    assert first.variant_names == ["teacher", "student", "pi-0.5"]
    assert all(0.0 <= s <= 1.0 for stats in first.variants for s in stats.samples)
    (mapped,) = run_map([cell], tiny_split, train_config, workers=2)
    assert mapped == first
