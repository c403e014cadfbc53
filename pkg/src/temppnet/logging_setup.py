from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

_CONSOLE_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
_FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
_HANDLER_TAG = "_temppnet_handler"


def resolve_level(level: str | None = None) -> int:
    """Flag value, else ``TEMPPNET_LOG_LEVEL``, else INFO."""

    raw = (level or os.environ.get("TEMPPNET_LOG_LEVEL") or "INFO").strip().upper()
    value = logging.getLevelName(raw)
    if not isinstance(value, int):
        raise ValueError(f"Unknown log level: {raw}")
    return value


def configure_logging(level: str | None = None, log_file: Path | None = None) -> logging.Logger:
    """Configure the ``temppnet`` logger with a console handler and optional file handler.

    Repeated calls replace the handlers installed by a previous call instead of
    stacking duplicates.
    """

    logger = logging.getLogger("temppnet")
    resolved = resolve_level(level)
    logger.setLevel(min(resolved, logging.DEBUG) if log_file else resolved)

    for handler in list(logger.handlers):
        if getattr(handler, _HANDLER_TAG, False):
            logger.removeHandler(handler)
            handler.close()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(resolved)
    console_handler.setFormatter(logging.Formatter(_CONSOLE_FORMAT, datefmt="%H:%M:%S"))
    setattr(console_handler, _HANDLER_TAG, True)
    logger.addHandler(console_handler)

    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, mode="w", encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(_FILE_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
        setattr(file_handler, _HANDLER_TAG, True)
        logger.addHandler(file_handler)

    return logger
