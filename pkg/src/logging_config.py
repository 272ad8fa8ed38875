"""Logging configuration for the top-view fisheye renderer."""

import logging
import sys
from pathlib import Path

from src.config import get_config

# Third-party loggers that are chatty at INFO/DEBUG (PNG chunk dumps, font cache scans)
QUIET_LOGGERS = ("PIL", "matplotlib")


def setup_logging(log_level: str | None = None, log_file: str | Path | None = None) -> None:
    """
    Configure application-wide logging.

    Records go to stderr; stdout is left to command output (reports, ray
    listings, render summaries) so it can be piped.

    Args:
        log_level: Optional log level override. If None, uses config value.
        log_file: Optional file that receives the same records
    """
    config = get_config()
    level = log_level or config.log_level
    numeric_level = getattr(logging, level.upper(), logging.INFO)

    formatter = logging.Formatter(config.log_format)
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file is not None:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)
    for old in root_logger.handlers:
        if isinstance(old, logging.FileHandler):
            old.close()
    root_logger.handlers.clear()
    for handler in handlers:
        handler.setFormatter(formatter)
        handler.setLevel(numeric_level)
        root_logger.addHandler(handler)

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(max(numeric_level, logging.WARNING))
