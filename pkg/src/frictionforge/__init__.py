"""Friction-sound pattern inference and PatternMasterPrint synthesis toolkit."""

from .errors import CalibrationError, FrictionForgeError, IngestionError, ParameterError
from .labels import PATTERNS, PatternLabel

__version__ = "0.1.0"

__all__ = ["__version__", "PatternLabel", "PATTERNS", "FrictionForgeError", "ParameterError",
           "IngestionError", "CalibrationError"]
