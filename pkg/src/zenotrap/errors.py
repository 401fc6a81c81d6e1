"""Exception types shared across the package."""
from __future__ import annotations


class ZenotrapError(Exception):
    """Base class for errors raised by this package."""


class TruncationError(ZenotrapError):
    """The Fock-space truncation cannot hold the requested state or dynamics.

    Carries the dimension that would satisfy the tail budget, when known.
    """

    def __init__(self, message: str, required_dim: int | None = None):
        super().__init__(message)
        self.required_dim = required_dim


class StiffnessError(ZenotrapError):
    """The adaptive integrator failed to advance; reports how far it got."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(message)
        self.t_reached = t_reached


class ConfigError(ZenotrapError):
    """A scenario configuration file could not be parsed or validated."""

    def __init__(self, message: str, line_no: int | None = None, key: str | None = None):
        super().__init__(message)
        self.line_no = line_no
        self.key = key
