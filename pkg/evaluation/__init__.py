"""
LupiSeg Evaluation Package

Pixel-wise F1, 95% confidence intervals and report rendering. The
experiment harness is imported explicitly:

    from evaluation.experiment import build_experiment_map, run_map
"""
from .metrics import confusion_counts, f1_score, confidence_interval_95, summarize

__all__ = [
    "confusion_counts",
    "f1_score",
    "confidence_interval_95",
    "summarize",
]
