"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class SPFCError(Exception):
    """Base class for all errors raised by :mod:`spfc`."""


class PreconditionError(SPFCError, ValueError):
    """An argument violates a documented precondition."""


class GridMismatchError(SPFCError, ValueError):
    """Fields or components that must share a grid do not."""


class BlowUpError(SPFCError, FloatingPointError):
    """A time step produced non-finite values.

    The offending step index and time are kept on the instance so callers
    can report where the integration broke down.
    """

    def __init__(self, step_index: int, time: float, what: str = "solution") -> None:
        self.step_index = step_index
        self.time = time
        self.what = what
        super().__init__(f"non-finite {what} at step {step_index} (t={time:.17g})")


class SolverError(SPFCError, ArithmeticError):
    """An internal solver invariant failed (should never happen)."""


class ConfigError(SPFCError, ValueError):
    """Invalid run configuration."""
