"""
LupiSeg Database Engine Configuration

SQLAlchemy engine setup for the results ledger. Uses SQLite under the runs
directory by default; point LUPISEG_DATABASE_URL elsewhere for a shared
database.

Usage:
    from database.engine import SessionLocal, Base, init_db

    init_db()
    with SessionLocal() as db:
        ...

To reset the ledger during development:
    python reset_db.py
"""
import logging
from pathlib import Path
from typing import Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine, make_url
from sqlalchemy.orm import declarative_base, sessionmaker

from config.settings import get_settings

logger = logging.getLogger(__name__)

# =============================================================================
# ENGINE & SESSION SETUP
# =============================================================================

# Bound lazily so tests and the CLI can pick the URL first
SessionLocal = sessionmaker(expire_on_commit=False)

# Base class for all models
Base = declarative_base()

_engine: Optional[Engine] = None


def configure_engine(url: Optional[str] = None) -> Engine:
    """Create (or replace) the engine and bind the session factory to it."""
    global _engine
    url = url or get_settings().database_url
    parsed = make_url(url)
    if parsed.get_backend_name() == "sqlite" and parsed.database not in (None, "", ":memory:"):
        Path(parsed.database).parent.mkdir(parents=True, exist_ok=True)
    if _engine is not None:
        _engine.dispose()
    _engine = create_engine(
        url,
        echo=False,  # Set to True to see SQL queries in console
        pool_pre_ping=True,
    )
    SessionLocal.configure(bind=_engine)
    logger.debug("Database engine configured", extra={"url": parsed.render_as_string(hide_password=True)})
    return _engine


def get_engine() -> Engine:
    return _engine if _engine is not None else configure_engine()


def init_db() -> None:
    """Create any missing ledger tables."""
    import database.models  # noqa: F401  registers the models with Base.metadata

    Base.metadata.create_all(get_engine())


def get_db_session():
    """Session bound to the configured engine (engine created on first use)."""
    get_engine()
    return SessionLocal()
