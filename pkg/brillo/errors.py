# File: errors.py
# Date: 14-10-2026
#
"""
Exceptions raised by the package.

Each class carries the exit status the command line returns for it.
Soft failures (a reconstruction that did not converge, a fit that hit its
iteration limit) are never raised: they travel inside the results.
"""


class BrilloError(Exception):
    """Base class of every error raised on purpose by the package"""
    exit_code = 1


class UsageError(BrilloError):
    """Bad invocation: unknown config key, malformed value or option"""
    exit_code = 1


class DataError(BrilloError, ValueError):
    """Invalid or inconsistent data or parameters"""
    exit_code = 2


class ConvergenceError(BrilloError):
    """An algorithm could not produce a usable answer"""
    exit_code = 3
