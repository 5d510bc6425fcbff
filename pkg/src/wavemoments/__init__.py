"""Wavelet-variance estimation and minimum-distance fitting of composite
time-series models, plus the bootstrap inference tools built on top."""

from .errors import DataError, ModelError, NumericalError, WaveMomentsError
from .models import (
    ModelSpec,
    ModelTerm,
    from_unconstrained,
    param_vector,
    parse_model,
    print_model,
    set_params,
    to_unconstrained,
    validate_model,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "DataError",
    "ModelError",
    "NumericalError",
    "WaveMomentsError",
    "ModelSpec",
    "ModelTerm",
    "parse_model",
    "print_model",
    "validate_model",
    "param_vector",
    "set_params",
    "to_unconstrained",
    "from_unconstrained",
]
