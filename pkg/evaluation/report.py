"""
Report Rendering

Formats:
    table-text - one line per cell, mean +/- CI per variant, best marked **x**
    csv        - one line per (cell, variant, repetition)
    plot-data  - CSV of variant means pooled per sample-range group
    plot-png   - bar plots, one panel per sample-range group

Every file starts with a header carrying the config hash and seed list.
The best marker goes to the highest 3-decimal mean among the student and
PI variants; the teacher never competes. Ties mark every tied variant and
are listed under the table.
"""
import csv
import io
import logging
from collections import OrderedDict
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

from common.errors import ArgumentError
from .experiment import MetricsRow, VariantStats, is_competitor
from .metrics import summarize

logger = logging.getLogger(__name__)

ReportFormat = Literal["table-text", "csv", "plot-data", "plot-png"]
REPORT_FORMATS = ("table-text", "csv", "plot-data", "plot-png")
BEST_DECIMALS = 3


def best_variants(row: MetricsRow) -> List[str]:
    """Variants carrying the best marker for one row."""
    competitors = [s for s in row.variants if is_competitor(s.variant)]
    if not competitors:
        return []
    top = max(round(s.mean_f1, BEST_DECIMALS) for s in competitors)
    return [s.variant for s in competitors if round(s.mean_f1, BEST_DECIMALS) == top]


def plot_groups(rows: Sequence[MetricsRow]) -> "OrderedDict[Tuple[int, int], List[MetricsRow]]":
    """Rows grouped by sample range, in order of first appearance."""
    groups: "OrderedDict[Tuple[int, int], List[MetricsRow]]" = OrderedDict()
    for row in rows:
        groups.setdefault(tuple(row.sample_range), []).append(row)
    return groups


def pooled_stats(rows: Sequence[MetricsRow]) -> List[VariantStats]:
    """Pool the repetition samples of several rows per variant."""
    pooled: Dict[str, List[float]] = OrderedDict()
    for row in rows:
        for stats in row.variants:
            pooled.setdefault(stats.variant, []).extend(stats.samples)
    result = []
    for variant, samples in pooled.items():
        mean, half_width = summarize(samples)
        result.append(VariantStats(variant=variant, mean_f1=mean, ci_half_width=half_width, samples=samples))
    return result


def _header(config_hash: Optional[str], seeds: Optional[Sequence[int]]) -> List[str]:
    return [
        f"# config_hash: {config_hash or 'unknown'}",
        f"# seeds: {', '.join(str(s) for s in seeds) if seeds else 'unknown'}",
    ]


def _variant_columns(rows: Sequence[MetricsRow]) -> List[str]:
    columns: List[str] = []
    for row in rows:
        for name in row.variant_names:
            if name not in columns:
                columns.append(name)
    return columns


def _cell(stats: VariantStats, best: bool) -> str:
    text = f"{stats.mean_f1:.3f}"
    if stats.ci_half_width is not None:
        text += f" ± {stats.ci_half_width:.3f}"
    return f"**{text}**" if best else text


def _table_text(rows: Sequence[MetricsRow], header: List[str]) -> str:
    columns = _variant_columns(rows)
    table = [["id", "fold", "range", "iters"] + columns]
    ties = []
    for row in rows:
        best = best_variants(row)
        if len(best) > 1:
            ties.append(f"# tie in {row.experiment_id}: {', '.join(best)}")
        line = [row.experiment_id, str(row.training_fold), f"{row.sample_range[0]}-{row.sample_range[1]}",
                str(row.repetitions)]
        for name in columns:
            try:
                line.append(_cell(row.variant(name), name in best))
            except KeyError:
                line.append("-")
        table.append(line)
    widths = [max(len(r[i]) for r in table) for i in range(len(table[0]))]
    body = ["  ".join(value.ljust(width) for value, width in zip(r, widths)).rstrip() for r in table]
    return "\n".join(header + body + ties) + "\n"


def _csv(header: List[str], fieldnames: List[str], records: List[dict]) -> str:
    buffer = io.StringIO()
    buffer.write("\n".join(header) + "\n")
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(records)
    return buffer.getvalue()


def _csv_rows(rows: Sequence[MetricsRow], header: List[str]) -> str:
    records = [
        {
            "experiment_id": row.experiment_id,
            "training_fold": row.training_fold,
            "range_start": row.sample_range[0],
            "range_end": row.sample_range[1],
            "variant": stats.variant,
            "repetition": repetition,
            "f1": repr(sample),
        }
        for row in rows
        for stats in row.variants
        for repetition, sample in enumerate(stats.samples, start=1)
    ]
    fields = ["experiment_id", "training_fold", "range_start", "range_end", "variant", "repetition", "f1"]
    return _csv(header, fields, records)


def _plot_data(rows: Sequence[MetricsRow], header: List[str]) -> str:
    records = []
    for (start, end), group in plot_groups(rows).items():
        for stats in pooled_stats(group):
            records.append({
                "range_start": start,
                "range_end": end,
                "variant": stats.variant,
                "mean_f1": repr(stats.mean_f1),
                "ci_half_width": "" if stats.ci_half_width is None else repr(stats.ci_half_width),
                "samples": len(stats.samples),
            })
    fields = ["range_start", "range_end", "variant", "mean_f1", "ci_half_width", "samples"]
    return _csv(header, fields, records)


def _plot_png(rows: Sequence[MetricsRow], path: Path, header: List[str]) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    groups = plot_groups(rows)
    fig, axes = plt.subplots(1, len(groups), figsize=(4 * len(groups), 4), sharey=True, squeeze=False)
    for ax, ((start, end), group) in zip(axes[0], groups.items()):
        stats = pooled_stats(group)
        names = [s.variant for s in stats]
        ax.bar(
            names,
            [s.mean_f1 for s in stats],
            yerr=[s.ci_half_width or 0.0 for s in stats],
            capsize=4,
            color="#7a9cc6",
        )
        ax.set_title(f"samples {start}-{end}")
        ax.set_ylim(0.0, 1.0)
        ax.tick_params(axis="x", rotation=45)
    axes[0][0].set_ylabel("F1")
    fig.suptitle("  ".join(line.lstrip("# ") for line in header), fontsize=8)
    # no Software tag: equal rows give equal bytes
    fig.savefig(path, format="png", metadata={"Software": None, "Description": "\n".join(header)})
    plt.close(fig)


def render_report(
    rows: Sequence[MetricsRow],
    fmt: ReportFormat,
    path: Union[str, Path],
    config_hash: Optional[str] = None,
    seeds: Optional[Sequence[int]] = None,
) -> Path:
    """
    Write the rows in the given format to path.

    Raises:
        ArgumentError: no rows or unknown format
    """
    if not rows:
        raise ArgumentError("Nothing to report: no rows")
    if fmt not in REPORT_FORMATS:
        raise ArgumentError(f"Unknown report format '{fmt}', expected one of {REPORT_FORMATS}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _header(config_hash, seeds)

    if fmt == "plot-png":
        _plot_png(rows, path, header)
    else:
        render = {"table-text": _table_text, "csv": _csv_rows, "plot-data": _plot_data}[fmt]
        path.write_text(render(rows, header), encoding="utf-8")
    logger.info("Report written", extra={"path": str(path), "format": fmt, "rows": len(rows)})
    return path
