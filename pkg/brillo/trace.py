# File: trace.py
# Date: 19-10-2026
#
"""
The logging module shared among all others.

Every module imports the same loguru logger from here. Sinks are never
installed on import: the command line (or the user) calls :func:`configure`.
"""

import sys

from loguru import logger

# Stderr level for each verbosity step
VERBOSITY_LEVELS = ("WARNING", "INFO", "DEBUG")

LOG_FORMAT = "{time:HH:mm:ss.SSS} | {level: <7} | {module}:{line} - {message}"


def configure(verbosity: int = 0, logfile: str = None):
    """
    Replace every sink with a stderr sink at the level selected by
    'verbosity' and, optionally, a DEBUG file sink.

    Parameters
    ----------
    verbosity : int
        0 shows warnings only, 1 adds info messages, 2 or more adds debug
    logfile : str
        path of a log file, overwritten at each run
    """
    step = min(max(int(verbosity), 0), len(VERBOSITY_LEVELS) - 1)
    logger.remove()
    logger.add(sys.stderr, level=VERBOSITY_LEVELS[step], format=LOG_FORMAT)
    if logfile:
        logger.add(logfile, mode="w", level="DEBUG", format=LOG_FORMAT)
    logger.debug("logging configured at '{}'".format(VERBOSITY_LEVELS[step]))
