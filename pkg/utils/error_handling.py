"""
Error Handling Utilities
Domain exception hierarchy, centralized error responses and input validation
"""

import os
from typing import Any, Dict, Iterable, List, Optional

from pydantic import ValidationError

from models import ErrorResponse, ErrorType, MethodTag


class NearFieldError(Exception):
    """Base class of every failure raised by the toolkit"""
    error_type: ErrorType = ErrorType.GENERAL_ERROR


class GeometryError(NearFieldError):
    error_type = ErrorType.GEOMETRY_ERROR


class ChannelError(NearFieldError):
    error_type = ErrorType.CHANNEL_ERROR


class DictionaryError(NearFieldError):
    error_type = ErrorType.DICTIONARY_ERROR


class SequenceError(NearFieldError):
    error_type = ErrorType.SEQUENCE_ERROR


class RecoveryError(NearFieldError):
    error_type = ErrorType.RECOVERY_ERROR


class EvaluationError(NearFieldError):
    error_type = ErrorType.EVALUATION_ERROR


class ConfigError(NearFieldError):
    error_type = ErrorType.CONFIG_ERROR


class ErrorHandler:
    """Centralized error handling"""

    EXIT_OK = 0
    EXIT_CONFIG = 1
    EXIT_RUNTIME = 2

    @staticmethod
    def classify(error: Exception) -> ErrorType:
        """Map an exception onto its error type"""
        if isinstance(error, NearFieldError):
            return error.error_type
        if isinstance(error, ValidationError):
            return ErrorType.INPUT_ERROR
        return ErrorType.GENERAL_ERROR

    @staticmethod
    def create_error_response(
        error_message: str,
        error_type: ErrorType = ErrorType.GENERAL_ERROR,
        details: Optional[Dict[str, Any]] = None
    ) -> ErrorResponse:
        """Create standardized error response"""
        return ErrorResponse(
            error=error_message,
            error_type=error_type,
            details=details
        )

    @staticmethod
    def log_error(logger, error: Exception, context: str = ""):
        """Log error with context"""
        error_msg = f"{context}: {str(error)}" if context else str(error)
        logger.error(error_msg, exc_info=True)

    @classmethod
    def exit_code(cls, error: Optional[Exception]) -> int:
        """Process exit code: 0 success, 1 configuration error, 2 runtime failure"""
        if error is None:
            return cls.EXIT_OK
        if isinstance(error, (ConfigError, ValidationError, FileNotFoundError)):
            return cls.EXIT_CONFIG
        return cls.EXIT_RUNTIME


class ValidationUtils:
    """Input validation utilities"""

    @staticmethod
    def validate_method_tags(tags: Iterable[str], registered: Iterable[MethodTag]) -> List[MethodTag]:
        """Resolve method tags, failing on the first unknown one"""
        known = {tag.value: tag for tag in registered}
        resolved = []
        for tag in tags:
            value = tag.value if isinstance(tag, MethodTag) else str(tag).strip().upper()
            if value not in known:
                raise ConfigError(f"Unknown method tag '{tag}'. Registered: {', '.join(sorted(known))}")
            resolved.append(known[value])
        return resolved

    @staticmethod
    def validate_config_path(path: str) -> Optional[str]:
        """Validate an experiment file path"""
        if not path:
            return "No configuration file provided"
        if not os.path.isfile(path):
            return f"Configuration file not found: {path}"
        if not path.endswith('.toml'):
            return "Configuration files must be TOML (.toml)"
        return None


# Global error handler instance
error_handler = ErrorHandler()
validation_utils = ValidationUtils()
