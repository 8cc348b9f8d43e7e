import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional

from app.core.config import TREG_CONFIG


def setup_logging(log_dir: Optional[str] = None, level: Optional[str] = None):
    """
    Set up centralized logging configuration for the toolkit.
    This configures both file and console handlers with appropriate log levels.

    Args:
        log_dir: Directory for app.log and error.log (default: TREG_LOG_DIR or <project root>/logs)
        level: Log level name (default: TREG_LOG_LEVEL or the configured level)
    """
    settings = TREG_CONFIG["logging"]
    if log_dir is None:
        log_dir = os.getenv("TREG_LOG_DIR") or settings["log_dir"]
    if log_dir is None:
        log_dir = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(__file__))), 'logs')
    os.makedirs(log_dir, exist_ok=True)

    level_name = (level or os.getenv("TREG_LOG_LEVEL") or settings["level"]).upper()
    log_level = getattr(logging, level_name, logging.INFO)

    # Remove all existing handlers to prevent duplicate logging
    root_logger = logging.getLogger()
    root_logger.handlers.clear()
    root_logger.setLevel(log_level)

    # Common format for all logs
    formatter = logging.Formatter(
        '%(asctime)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # Console handler
    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    # File handler for application logs - rotating file handler to manage size
    app_log_path = os.path.join(log_dir, 'app.log')
    file_handler = RotatingFileHandler(
        app_log_path,
        maxBytes=settings["max_bytes"],
        backupCount=settings["backup_count"]
    )
    file_handler.setLevel(log_level)
    file_handler.setFormatter(formatter)
    root_logger.addHandler(file_handler)

    # Separate error log file for ERROR and above
    error_log_path = os.path.join(log_dir, 'error.log')
    error_handler = RotatingFileHandler(
        error_log_path,
        maxBytes=settings["max_bytes"],
        backupCount=settings["backup_count"]
    )
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(formatter)
    root_logger.addHandler(error_handler)

    # Third-party loggers that are too verbose below WARNING
    for noisy in ('numba', 'matplotlib'):
        logging.getLogger(noisy).setLevel(logging.WARNING)

    return log_dir
