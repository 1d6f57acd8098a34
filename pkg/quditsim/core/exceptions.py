"""Exception hierarchy shared by the simulation services and the CLI."""

from typing import Any


class SimulationError(Exception):
    """Base class for every error raised by quditsim."""


class InvalidInputError(SimulationError, ValueError):
    """Rejected argument: dimension mismatch, non-positive step, bad grid."""


class ConfigError(SimulationError):
    """Run document could not be read or failed validation."""

    def __init__(self, message: str, issues: list[str] | None = None):
        super().__init__(message)
        self.issues = issues or []


class PlannerError(SimulationError):
    """No frequency assignment met the spurious-process threshold."""

    def __init__(self, message: str, best: dict[str, Any] | None = None):
        super().__init__(message)
        self.best = best or {}


class NumericalError(SimulationError):
    """A numerical procedure could not produce a trustworthy result."""


class HybridizationError(NumericalError):
    """Bright pair is strongly mixed with spectator states."""

    def __init__(self, message: str, eigenvector: dict[str, float] | None = None):
        super().__init__(message)
        self.eigenvector = eigenvector or {}


class FitError(NumericalError):
    """Oscillation fit failed or its residual exceeded the limit."""

    def __init__(self, message: str, rms_residual: float | None = None):
        super().__init__(message)
        self.rms_residual = rms_residual
