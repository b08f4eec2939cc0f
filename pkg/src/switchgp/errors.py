"""Exception types shared across the library.

The CLI maps these onto distinct exit codes, so library code should raise
the most specific class that applies.
"""


class SwitchGPError(Exception):
    """Base class for all library errors."""


class ConfigError(SwitchGPError, ValueError):
    """Invalid configuration: bad kernel spec, unknown column, bad argument."""


class DataError(SwitchGPError, ValueError):
    """Invalid data: unreadable CSV, non-finite values, degenerate targets."""


class DomainError(SwitchGPError, ValueError):
    """Parameter outside the mathematical domain of a kernel (e.g. damping >= 1)."""


class NumericalError(SwitchGPError, ArithmeticError):
    """Numerical failure, typically a Cholesky factorization that did not
    succeed even after jitter escalation."""

    def __init__(self, message, jitter=None):
        super().__init__(message)
        self.jitter = jitter


class OptimizationError(SwitchGPError, RuntimeError):
    """No optimizer restart produced a finite objective."""
