"""
LupiSeg Database Package

Provides the results ledger: engine, session management, and models.

Quick Start:
    from database import SessionLocal, Base, init_db, configure_engine
    from database.models import ExperimentRun, RepetitionResult, EpochLog

To reset the ledger (drops all tables and recreates):
    python reset_db.py
"""
from .engine import SessionLocal, Base, configure_engine, get_engine, init_db, get_db_session
from . import models

__all__ = [
    "SessionLocal",
    "Base",
    "configure_engine",
    "get_engine",
    "init_db",
    "get_db_session",
    "models",
]
