"""
Utilities package initialization
"""

from .error_handling import (
    error_handler, validation_utils, ErrorHandler, ValidationUtils,
    NearFieldError, GeometryError, ChannelError, DictionaryError,
    SequenceError, RecoveryError, EvaluationError, ConfigError
)

__all__ = [
    "error_handler", "validation_utils",
    "ErrorHandler", "ValidationUtils",
    "NearFieldError", "GeometryError", "ChannelError", "DictionaryError",
    "SequenceError", "RecoveryError", "EvaluationError", "ConfigError"
]
