"""Exception types shared across the package."""

from __future__ import annotations


class MPFTError(Exception):
    """Base class for all errors raised by mpft."""


class DimensionError(MPFTError, ValueError):
    """Vectors or matrices have incompatible shapes."""


class NumericError(MPFTError, ValueError):
    """Non-finite values where finite ones are required."""


class ConfigError(MPFTError, ValueError):
    """Invalid configuration or problem definition.

    ``key`` names the offending setting when known, so front-ends can point
    at the right line of a config file.
    """

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class DegenerateInputError(MPFTError, ValueError):
    """Geometric input has too low rank for the requested operation."""


class TrackingError(MPFTError, RuntimeError):
    """A tracking stage failed; the message names the stage and track."""
