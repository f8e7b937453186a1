"""
LupiSeg Services Package

Core services for the LupiSeg system.

Available Services:
    - results_service: results ledger (runs, repetition results, epoch logs)
    - artifact_service: run directories and the files written into them
"""
from .results.results_service import results_service
from .artifacts.artifact_service import artifact_service

__all__ = [
    "results_service",
    "artifact_service",
]
