"""
CLI Subcommands

synth     generate synthetic scenes
extract   patches + patient-disjoint split from labelled images
enhance   teacher channels for an archive
train     one teacher / student / PI student
evaluate  F1 of a checkpoint on an archive split
run-map   the experimentation map
report    render stored rows as a table, CSV, plot data or plot
"""
import argparse
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple

from common.errors import ArgumentError, DataError, ExperimentAbortedError
from database.models import RunStatus
from evaluation import f1_score
from evaluation.experiment import MetricsRow, build_experiment_map, run_map
from evaluation.report import REPORT_FORMATS, render_report
from patches import (
    build_split,
    build_teacher_dataset,
    extract_many,
    has_enhanced,
    read_archive,
    read_enhanced,
    write_archive,
    write_enhanced,
)
from segmentation import load_model, predict_masks, save_model
from services.artifacts import artifact_service
from services.results import results_service
from synthetic import generate_scene, read_scenes, write_scenes
from training import TrainedModel, model_inputs, train_pi_student, train_student, train_teacher
from channels.base import BaseCommand, CommandContext

logger = logging.getLogger(__name__)


def parse_range(text: str) -> Tuple[int, int]:
    """'1-400' -> (1, 400)."""
    try:
        start, end = (int(part) for part in text.split("-", 1))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected START-END, got {text!r}") from exc
    if start < 1 or end < start:
        raise argparse.ArgumentTypeError(f"need 1 <= START <= END, got {text!r}")
    return start, end


def _load_enhanced(archive: Path, split) -> Tuple[list, list]:
    if has_enhanced(archive):
        return (read_enhanced(archive, "train", split.train_patches),
                read_enhanced(archive, "test", split.test_patches))
    return build_teacher_dataset(split.train_patches), build_teacher_dataset(split.test_patches)


# =============================================================================
# DATA
# =============================================================================

class SynthCommand(BaseCommand):
    name = "synth"
    help = "Generate synthetic mammogram-like scenes with tumor masks"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--out", help="Scene directory (default: paths.scenes)")
        parser.add_argument("--patients", type=int, help="Number of patients (synthetic.patient_count)")
        parser.add_argument("--texture", choices=["flat", "gradient", "speckle"],
                            help="Tissue texture (synthetic.background_texture)")

    def config_overrides(self, args: argparse.Namespace) -> Dict[str, Any]:
        return {"paths.scenes": args.out, "synthetic.patient_count": args.patients,
                "synthetic.background_texture": args.texture}

    def run(self, ctx: CommandContext) -> int:
        scenes = generate_scene(ctx.config.synthetic)
        root = write_scenes(scenes, ctx.config.paths.scenes)
        ctx.echo(f"wrote {len(scenes)} scenes to {root}")
        return 0


class ExtractCommand(BaseCommand):
    name = "extract"
    help = "Extract validated patches and write a patient-disjoint patch archive"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--scenes", help="Labelled image directory with scenes.json (default: paths.scenes)")
        parser.add_argument("--out", help="Archive directory (default: paths.archive)")
        parser.add_argument("--workers", type=int, help="Extraction worker processes")

    def config_overrides(self, args: argparse.Namespace) -> Dict[str, Any]:
        return {"paths.scenes": args.scenes, "paths.archive": args.out}

    def run(self, ctx: CommandContext) -> int:
        config = ctx.config
        scenes = read_scenes(config.paths.scenes)
        results = extract_many(scenes, config.extraction, config.seed, workers=ctx.workers)
        patches = [patch for result in results for patch in result.patches]
        split = build_split(patches, config.split.train_patient_count, config.split.fold_count,
                            seed=config.seed, shuffle=config.split.shuffle)
        root = write_archive(split, config.paths.archive, config.extraction, config.seed)
        shortfall = {scene.image_id: result.report() for scene, result in zip(scenes, results)}
        artifact_service.write_json(ctx.run_dir, "extraction.json", {
            "archive": str(root),
            "patches": len(patches),
            "train": len(split.train_patches),
            "test": len(split.test_patches),
            "folds": [len(f) for f in split.folds],
            "shortfall": shortfall,
        })
        total = sum(r.shortfall for r in results)
        ctx.echo(f"extracted {len(patches)} patches from {len(scenes)} images (shortfall {total}) into {root}")
        return 0


class EnhanceCommand(BaseCommand):
    name = "enhance"
    help = "Build the 3-channel teacher inputs for every patch of an archive"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--archive", help="Patch archive directory (default: paths.archive)")

    def config_overrides(self, args: argparse.Namespace) -> Dict[str, Any]:
        return {"paths.archive": args.archive}

    def run(self, ctx: CommandContext) -> int:
        archive = Path(ctx.config.paths.archive)
        split = read_archive(archive)
        enhanced = {
            "train": build_teacher_dataset(split.train_patches),
            "test": build_teacher_dataset(split.test_patches),
        }
        where = write_enhanced(enhanced, archive)
        ctx.echo(f"enhanced {len(enhanced['train'])} train and {len(enhanced['test'])} test patches into {where}")
        return 0


# =============================================================================
# TRAINING
# =============================================================================

class TrainCommand(BaseCommand):
    name = "train"
    help = "Train a teacher, a baseline student or a privileged-information student"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--mode", choices=["teacher", "student", "pi"], required=True, help="Model to train")
        parser.add_argument("--alpha", type=float, help="Ground-truth weight of the PI loss (train.alpha)")
        parser.add_argument("--archive", help="Patch archive directory (default: paths.archive)")
        parser.add_argument("--teacher", help="Teacher checkpoint (required for --mode pi)")
        parser.add_argument("--fold", type=int, help="Train on this 1-based fold only (default: all train patches)")
        parser.add_argument("--range", type=parse_range, help="START-END sample range within --fold, 1-based")
        parser.add_argument("--epochs", type=int, help="Epochs (train.epochs)")
        parser.add_argument("--max-steps", type=int, help="Cap on optimizer steps (train.max_steps)")
        parser.add_argument("--out", help="Checkpoint path (default: <run-dir>/checkpoints/<model>.ckpt)")

    def config_overrides(self, args: argparse.Namespace) -> Dict[str, Any]:
        return {"paths.archive": args.archive, "train.alpha": args.alpha,
                "train.epochs": args.epochs, "train.max_steps": args.max_steps}

    def _indices(self, args: argparse.Namespace, split) -> List[int]:
        if args.fold is None:
            if args.range is not None:
                raise ArgumentError("--range needs --fold")
            return list(range(len(split.train_patches)))
        if not 1 <= args.fold <= len(split.folds):
            raise ArgumentError(f"--fold must be in [1, {len(split.folds)}], got {args.fold}")
        fold = split.folds[args.fold - 1]
        if args.range is None:
            return list(fold)
        start, end = args.range
        if end > len(fold):
            raise ArgumentError(f"--range {start}-{end} exceeds fold size {len(fold)}")
        return fold[start - 1:end]

    def run(self, ctx: CommandContext) -> int:
        args, config = ctx.args, ctx.config
        if args.mode == "pi" and not args.teacher:
            raise ArgumentError("--mode pi needs --teacher")
        archive = Path(config.paths.archive)
        split = read_archive(archive)
        indices = self._indices(args, split)
        raw = [split.train_patches[i] for i in indices]

        run_id = results_service.start_run(f"train-{args.mode}", ctx.config_hash, [config.train.seed], str(ctx.run_dir))
        on_epoch = lambda record: results_service.record_epoch(run_id, record)  # noqa: E731
        try:
            if args.mode == "student":
                trained = train_student(raw, config.train, on_epoch=on_epoch)
            else:
                enhanced_train, _ = _load_enhanced(archive, split)
                enhanced = [enhanced_train[i] for i in indices]
                if args.mode == "teacher":
                    trained = train_teacher(enhanced, config.train, on_epoch=on_epoch)
                else:
                    teacher = load_model(args.teacher)
                    if teacher.in_channels != 3:
                        raise ArgumentError(f"--teacher must be a 3-channel model, got {teacher.in_channels}")
                    frozen = TrainedModel(model=teacher, config=config.train, label="teacher")
                    trained = train_pi_student(list(zip(raw, enhanced)), frozen, config.train, on_epoch=on_epoch)
        except Exception:
            results_service.finish_run(run_id, RunStatus.FAILED)
            raise

        path = Path(args.out) if args.out else artifact_service.checkpoint_path(ctx.run_dir, trained.label)
        save_model(trained.model, path)
        artifact_service.write_history(ctx.run_dir, trained)
        results_service.finish_run(run_id, RunStatus.COMPLETED)
        ctx.echo(f"{trained.label}: {trained.steps} steps, {len(trained.history)} epochs, checkpoint {path}")
        return 0


class EvaluateCommand(BaseCommand):
    name = "evaluate"
    help = "Score a checkpoint on an archive split with pixel-wise F1"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--checkpoint", required=True, help="Model checkpoint")
        parser.add_argument("--archive", help="Patch archive directory (default: paths.archive)")
        parser.add_argument("--split", choices=["train", "test"], default="test", help="Split to score (default: test)")
        parser.add_argument("--aggregation", choices=["micro", "macro"], help="F1 aggregation (experiment.f1_aggregation)")

    def config_overrides(self, args: argparse.Namespace) -> Dict[str, Any]:
        return {"paths.archive": args.archive, "experiment.f1_aggregation": args.aggregation}

    def run(self, ctx: CommandContext) -> int:
        args = ctx.args
        archive = Path(ctx.config.paths.archive)
        model = load_model(args.checkpoint)
        split = read_archive(archive)
        raw = split.train_patches if args.split == "train" else split.test_patches
        if not raw:
            raise DataError(f"The {args.split} split of {archive} is empty")
        if model.in_channels == 3:
            enhanced_train, enhanced_test = _load_enhanced(archive, split)
            items = enhanced_train if args.split == "train" else enhanced_test
        else:
            items = raw
        predicted = predict_masks(model, model_inputs(items))
        aggregation = ctx.config.experiment.f1_aggregation
        score = f1_score(predicted, [p.mask for p in raw], aggregation)
        artifact_service.write_json(ctx.run_dir, "evaluation.json", {
            "checkpoint": str(args.checkpoint),
            "split": args.split,
            "patches": len(raw),
            "aggregation": aggregation,
            "f1": score,
        })
        ctx.echo(f"F1 ({aggregation}, {args.split}, {len(raw)} patches): {score:.4f}")
        return 0


# =============================================================================
# EXPERIMENTS
# =============================================================================

def _metrics_payload(digest: str, seeds: List[int], rows: List[MetricsRow], status: str) -> Dict[str, Any]:
    return {"config_hash": digest, "seeds": seeds, "status": status,
            "rows": [row.model_dump(mode="json") for row in rows]}


class RunMapCommand(BaseCommand):
    name = "run-map"
    help = "Run the experimentation map and write metrics plus a table report"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--archive", help="Patch archive directory (default: paths.archive)")
        parser.add_argument("--workers", type=int, help="Parallel experiment cells (default: LUPISEG_WORKERS)")

    def config_overrides(self, args: argparse.Namespace) -> Dict[str, Any]:
        return {"paths.archive": args.archive}

    def run(self, ctx: CommandContext) -> int:
        config = ctx.config
        archive = Path(config.paths.archive)
        split = read_archive(archive)
        enhanced_train, enhanced_test = _load_enhanced(archive, split)
        specs = build_experiment_map(config.experiment)
        seeds = config.experiment.repetition_seeds()
        run_id = results_service.start_run("run-map", ctx.config_hash, seeds, str(ctx.run_dir))

        try:
            rows = run_map(specs, split, config.train, workers=ctx.workers,
                           enhanced_train=enhanced_train, enhanced_test=enhanced_test)
        except ExperimentAbortedError as exc:
            partial = list(exc.partial_results)
            results_service.record_rows(run_id, partial, seeds)
            results_service.finish_run(run_id, RunStatus.ABORTED)
            artifact_service.write_json(ctx.run_dir, "metrics.json",
                                        _metrics_payload(ctx.config_hash, seeds, partial, "aborted"))
            raise

        results_service.record_rows(run_id, rows, seeds)
        results_service.finish_run(run_id, RunStatus.COMPLETED)
        artifact_service.write_json(ctx.run_dir, "metrics.json",
                                    _metrics_payload(ctx.config_hash, seeds, rows, "completed"))
        report = render_report(rows, "table-text", ctx.run_dir / "report.txt", ctx.config_hash, seeds)
        ctx.echo(f"run {run_id}: {len(rows)} cells, report {report}")
        return 0


class ReportCommand(BaseCommand):
    name = "report"
    help = "Render stored experiment rows as a table, CSV, plot data or a plot"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument("--metrics", help="metrics.json written by run-map")
        source.add_argument("--run-id", type=int, help="Ledger run id")
        parser.add_argument("--format", choices=REPORT_FORMATS, default="table-text", help="Output format")
        parser.add_argument("--out", help="Output file (default: <run-dir>/report.<ext>)")

    def run(self, ctx: CommandContext) -> int:
        args = ctx.args
        if args.metrics:
            try:
                payload = json.loads(Path(args.metrics).read_text(encoding="utf-8"))
                rows = [MetricsRow.model_validate(row) for row in payload["rows"]]
            except (ValueError, KeyError) as exc:
                raise DataError(f"Invalid metrics file {args.metrics}: {exc}") from exc
            digest, seeds = payload.get("config_hash"), payload.get("seeds")
        else:
            run = results_service.get_run(args.run_id)
            if run is None:
                raise DataError(f"No run with id {args.run_id} in the ledger")
            rows = results_service.load_rows(args.run_id)
            digest, seeds = run.config_hash, run.seeds
        extension = {"table-text": "txt", "csv": "csv", "plot-data": "csv", "plot-png": "png"}[args.format]
        out = Path(args.out) if args.out else ctx.run_dir / f"report.{extension}"
        render_report(rows, args.format, out, digest, seeds)
        ctx.echo(f"wrote {args.format} report with {len(rows)} rows to {out}")
        return 0


COMMANDS = [
    SynthCommand(),
    ExtractCommand(),
    EnhanceCommand(),
    TrainCommand(),
    EvaluateCommand(),
    RunMapCommand(),
    ReportCommand(),
]
