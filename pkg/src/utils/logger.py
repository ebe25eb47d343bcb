"""Logging setup for RsesTrial

Diagnostics go to stderr; stdout carries command output only.
"""

import logging
import sys
from pathlib import Path

from src.utils.paths import ensure_user_data_dir, get_default_log_path

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logger(
    level: int = logging.WARNING, log_file: str | None = None, log_to_file: bool = False
) -> logging.Logger:
    """Configure the root logger

    A file handler is added for ``log_file``, or for the default log path
    when only ``log_to_file`` is set.
    """
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file or log_to_file:
        if log_file:
            log_path = Path(log_file)
        else:
            ensure_user_data_dir()
            log_path = get_default_log_path()
        handlers.append(logging.FileHandler(log_path, encoding="utf-8"))

    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)
    return logging.getLogger(__name__)
