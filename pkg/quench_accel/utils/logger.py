# utils/logger.py

import logging
import os
from typing import Optional


def setup_logger(name: str, log_file: Optional[str] = None, level=logging.INFO) -> logging.Logger:
    """
    Sets up a logger with the specified name and optional log file.

    Ensures that each logger has only one handler to prevent duplicate logs
    and unclosed file handles. Without a log file the logger writes to stderr.

    Args:
        name (str): The name of the logger.
        log_file (Optional[str]): The path to the log file, or None for stderr.
        level (int): Logging level (default: logging.INFO).

    Returns:
        logging.Logger: Configured logger instance.
    """
    logger = logging.getLogger(name)

    # If the logger already has handlers, only adjust the level
    if logger.handlers:
        logger.setLevel(level)
        for handler in logger.handlers:
            handler.setLevel(level)
        return logger

    logger.setLevel(level)

    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        handler: logging.Handler = logging.FileHandler(log_file)
    else:
        handler = logging.StreamHandler()
    handler.setLevel(level)

    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    handler.setFormatter(formatter)
    logger.addHandler(handler)

    # Keep library logs out of the root logger
    logger.propagate = False

    return logger
