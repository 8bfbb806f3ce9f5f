"""Fault hierarchy shared by the simulator, the learning stack and the harness."""
from __future__ import annotations

from typing import Any


class GlucoseControlError(Exception):
    """Base class for every fault raised by this project."""


class NumericalFault(GlucoseControlError, ArithmeticError):
    """A computation produced NaN/Inf values."""

    def __init__(self, message: str, **context: Any):
        self.context = context
        if context:
            details = ", ".join(f"{key}={value}" for key, value in context.items())
            message = f"{message} ({details})"
        super().__init__(message)


class ConfigurationFault(GlucoseControlError, ValueError):
    """Inconsistent shapes, dimensions or configuration values."""

    def __init__(self, message: str, errors: dict[str, Any] | None = None):
        self.errors = errors or {}
        super().__init__(message)


class UsageFault(GlucoseControlError, RuntimeError):
    """An API was called in a state its contract forbids."""


class EpisodeAborted(GlucoseControlError):
    """An episode stopped early; the records collected so far are preserved."""

    def __init__(self, message: str, records: list | None = None):
        self.records = records or []
        super().__init__(message)
