import logging
import traceback
from datetime import datetime, timezone
from functools import wraps
from typing import Optional, Dict, Any

logger = logging.getLogger(__name__)


class SwitchSimError(Exception):
    """Base exception class for simulator and experiment errors"""

    def __init__(self, message: str, error_code: str = "GENERAL_ERROR", details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        self.timestamp = datetime.now(timezone.utc)
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert error to a dictionary for run records"""
        return {
            "error": True,
            "error_code": self.error_code,
            "message": self.message,
            "details": self.details,
            "timestamp": self.timestamp.isoformat()
        }


class ValidationError(SwitchSimError):
    """Raised when input validation fails"""

    def __init__(self, field: str, message: str = None, details: Optional[Dict[str, Any]] = None):
        default_message = f"Validation failed for field: {field}"
        super().__init__(
            message or default_message,
            error_code="VALIDATION_ERROR",
            details={**(details or {}), "field": field}
        )


class QubitIndexError(SwitchSimError, IndexError):
    """Raised when a qubit index falls outside the register"""

    def __init__(self, index: int, n_qubits: int, message: str = None):
        default_message = f"Qubit index {index} out of range for a {n_qubits}-qubit register"
        super().__init__(
            message or default_message,
            error_code="QUBIT_INDEX_ERROR",
            details={"index": index, "n_qubits": n_qubits}
        )


class PermutationRangeError(SwitchSimError, ValueError):
    """Raised when a permutation rank lies outside [0, N!)"""

    def __init__(self, rank: int, n: int, message: str = None):
        default_message = f"Permutation rank {rank} outside [0, {n}!)"
        super().__init__(
            message or default_message,
            error_code="PERMUTATION_RANGE_ERROR",
            details={"rank": rank, "n": n}
        )


class ConfigurationError(SwitchSimError):
    """Raised when a layout or experiment configuration is inconsistent"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, error_code="CONFIGURATION_ERROR", details=details)


class SpectrumMismatchError(SwitchSimError):
    """Raised when a sampled function carries frequencies beyond the requested band"""

    def __init__(self, max_freq: int, residual: float, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            f"Reconstruction error {residual:.3e} with max frequency {max_freq}",
            error_code="SPECTRUM_MISMATCH",
            details={**(details or {}), "max_freq": max_freq, "residual": residual}
        )


class ToleranceError(SwitchSimError):
    """Raised when an experiment check exceeds its tolerance"""

    def __init__(self, case: str, deviation: float, tolerance: float):
        super().__init__(
            f"Case '{case}' deviates by {deviation:.3e} (tolerance {tolerance:.1e})",
            error_code="TOLERANCE_ERROR",
            details={"case": case, "deviation": deviation, "tolerance": tolerance}
        )


def handle_experiment_errors(experiment_name: str):
    """Decorator to log errors raised while running an experiment"""

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except SwitchSimError as e:
                logger.error(f"{experiment_name} failed [{e.error_code}]: {e.message}")
                raise
            except Exception as e:
                logger.error(f"Unexpected error in {experiment_name}: {str(e)}\n{traceback.format_exc()}")
                raise SwitchSimError(
                    f"Unexpected error in {experiment_name}: {e}",
                    error_code="UNEXPECTED_ERROR",
                    details={"original_error": str(e)}
                ) from e

        return wrapper

    return decorator


def log_call(name: str):
    """Decorator to log entry and exit of coarse operations"""

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            logger.info(f"{name} started")
            try:
                result = func(*args, **kwargs)
                logger.info(f"{name} completed")
                return result
            except Exception as e:
                logger.error(f"{name} failed: {str(e)}")
                raise

        return wrapper

    return decorator
