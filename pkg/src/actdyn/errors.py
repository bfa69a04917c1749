"""Exception types shared across the package.

The CLI maps InputError to exit code 1 and NumericalError to exit code 2.
"""


class ActdynError(Exception):
    """Base class for all package errors."""


class InputError(ActdynError, ValueError):
    """Malformed or degenerate input: bad event logs, misaligned series,
    contract violations the caller can fix by changing the data."""


class NumericalError(ActdynError, RuntimeError):
    """A numerical procedure failed: non-convergence, divergence."""


class ConvergenceError(NumericalError):
    """An iteration hit its cap without meeting its tolerance.

    Carries the last residual/iteration count so callers can decide
    whether to retry with a larger budget.
    """

    def __init__(self, message: str, *, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
