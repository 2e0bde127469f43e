"""
Core module: error hierarchy and logging setup

Configuration and export live in core.config_manager and core.data_exporter;
they build on the analysis package and are imported from there directly.
"""

from .exceptions import (AcceptanceFailure, ConfigValidationError, DimensionError, DomainError,
                         EllipsoidError, FLMError, SearchLimitError)
from .logging_setup import configure_logging

__all__ = [
    'FLMError',
    'DomainError',
    'DimensionError',
    'EllipsoidError',
    'ConfigValidationError',
    'SearchLimitError',
    'AcceptanceFailure',
    'configure_logging',
]
