"""
Results Ledger Service Package
"""
from .results_service import results_service, ResultsService

__all__ = ["results_service", "ResultsService"]
