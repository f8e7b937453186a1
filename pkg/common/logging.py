"""
Structured Logging Setup

All modules log through `logging.getLogger(__name__)`. The entry point calls
configure_logging() once; records are written to stderr as JSON objects, one
per line, with any `extra={...}` fields merged in.

Usage:
    from common.logging import configure_logging
    configure_logging("INFO")
"""
import logging
import sys
from typing import Optional, TextIO

from pythonjsonlogger.json import JsonFormatter

LOG_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"


def configure_logging(level: str = "INFO", stream: Optional[TextIO] = None) -> logging.Logger:
    """
    Install a single JSON handler on the root logger.

    Calling it again replaces the previous handler instead of stacking a
    second one.
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_lupiseg", False):
            root.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(JsonFormatter(LOG_FORMAT))
    handler._lupiseg = True  # type: ignore[attr-defined]
    root.addHandler(handler)
    root.setLevel(level.upper())
    return root
