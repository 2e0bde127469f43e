"""
Error hierarchy for the flm_threshold package
"""


class FLMError(Exception):
    """Base class for all package errors"""


class DomainError(FLMError, ValueError):
    """Argument outside its mathematical domain"""


class DimensionError(FLMError, ValueError):
    """Inconsistent dimensions (m > J, truncation mismatch, bad shapes)"""


class EllipsoidError(FLMError, ValueError):
    """Slope function outside the Sobolev ellipsoid"""


class ConfigValidationError(FLMError, ValueError):
    """Experiment configuration violates an invariant"""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class SearchLimitError(FLMError, RuntimeError):
    """Balancing search did not terminate below its cap"""


class AcceptanceFailure(FLMError):
    """A rate verdict did not pass"""
