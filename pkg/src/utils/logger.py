"""
Logging utilities for the CTRR toolkit

Every logger lives under the ``ctrr`` namespace, so ``setup_logger('training')``
configures ``ctrr.training``.
"""

import logging
import sys
from datetime import datetime
from typing import Optional

from src.config.settings import RuntimeConfig

ROOT_NAMESPACE = 'ctrr'
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def qualified_name(name: str) -> str:
    if name == ROOT_NAMESPACE or name.startswith(ROOT_NAMESPACE + '.'):
        return name
    return f"{ROOT_NAMESPACE}.{name}"


def setup_logger(name: str = ROOT_NAMESPACE,
                 level: Optional[str] = None,
                 log_to_file: Optional[bool] = None) -> logging.Logger:
    """
    Setup logger with a stderr console handler and an optional file handler

    stdout is left to command results; the file handler writes one dated
    file per component under RuntimeConfig.LOG_DIR.

    Args:
        name: Component name, qualified under the ctrr namespace
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_to_file: Whether to log to file (default: RuntimeConfig.LOG_TO_FILE)

    Returns:
        Configured logger instance
    """
    level = (level or RuntimeConfig.LOG_LEVEL).upper()
    if log_to_file is None:
        log_to_file = RuntimeConfig.LOG_TO_FILE

    logger = logging.getLogger(qualified_name(name))
    logger.setLevel(getattr(logging, level))

    # Repeated setup must not stack handlers
    logger.handlers = []
    logger.propagate = False

    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    console = logging.StreamHandler(sys.stderr)
    console.setLevel(getattr(logging, level))
    console.setFormatter(formatter)
    logger.addHandler(console)

    if log_to_file:
        RuntimeConfig.ensure_directories()
        stamp = datetime.now().strftime('%Y%m%d')
        file_handler = logging.FileHandler(RuntimeConfig.LOG_DIR / f"{name}_{stamp}.log")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger
