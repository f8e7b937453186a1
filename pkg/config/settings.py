"""
Environment Settings

Read from the process environment (a .env file is loaded by the entry
point through python-dotenv):

    LUPISEG_RUNS_DIR      - root of run directories and the ledger (default: runs)
    LUPISEG_DATABASE_URL  - results ledger URL (default: sqlite:///<runs_dir>/lupiseg.db)
    LUPISEG_LOG_LEVEL     - root log level (default: INFO)
    LUPISEG_WORKERS       - worker pool size (default: logical core count)
"""
import os
from dataclasses import dataclass
from pathlib import Path

from common.errors import ConfigError


@dataclass(frozen=True)
class Settings:
    runs_dir: Path
    database_url: str
    log_level: str
    workers: int


def get_settings() -> Settings:
    runs_dir = Path(os.getenv("LUPISEG_RUNS_DIR", "runs"))
    database_url = os.getenv("LUPISEG_DATABASE_URL") or f"sqlite:///{runs_dir / 'lupiseg.db'}"
    raw_workers = os.getenv("LUPISEG_WORKERS")
    try:
        workers = int(raw_workers) if raw_workers else (os.cpu_count() or 1)
    except ValueError as exc:
        raise ConfigError(f"not an integer: {raw_workers!r}", key_path="LUPISEG_WORKERS") from exc
    if workers < 1:
        raise ConfigError(f"must be >= 1, got {workers}", key_path="LUPISEG_WORKERS")
    return Settings(
        runs_dir=runs_dir,
        database_url=database_url,
        log_level=os.getenv("LUPISEG_LOG_LEVEL", "INFO").upper(),
        workers=workers,
    )
