"""
Exceptions raised by the TTO / EoF toolkit.
Each carries the exit code the command line reports for it.
"""

EXIT_OK = 0
EXIT_CAPACITY = 2
EXIT_USAGE = 64
EXIT_DATA = 65


class EofError(Exception):
    """Base class for every error the toolkit raises on purpose."""

    exit_code = EXIT_DATA


class InvalidInputError(EofError, ValueError):
    """A precondition on an argument does not hold."""

    exit_code = EXIT_DATA


class UsageError(EofError):
    """Malformed command line or configuration file."""

    exit_code = EXIT_USAGE


class UnsupportedError(EofError):
    """Requested family or dimension has no implementation."""

    exit_code = EXIT_USAGE


class DegenerateFitError(EofError):
    """Scaling fit cannot be performed on the given data."""

    exit_code = EXIT_DATA


class CapacityError(EofError, MemoryError):
    """Dense storage for the requested size would not fit."""

    exit_code = EXIT_CAPACITY
