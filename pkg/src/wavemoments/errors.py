"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: usage problems exit 1,
``DataError`` exits 2 and ``NumericalError`` exits 3.
"""


class WaveMomentsError(Exception):
    """Base class for all package errors."""


class ModelError(WaveMomentsError):
    """Invalid model grammar, parameters or identifiability violation."""


class DataError(WaveMomentsError):
    """Unusable input data (malformed CSV, too short, non-finite values)."""


class NumericalError(WaveMomentsError):
    """A numerical routine failed to converge or produced no usable result."""
