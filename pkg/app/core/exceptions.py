"""
Exception hierarchy shared by the services and the command-line frontend.

Every exception carries the process exit code the CLI reports for it.
"""


class TregError(Exception):
    """Base class for toolkit errors."""
    exit_code = 3


class InputValidationError(TregError, ValueError):
    """Raised when caller-supplied data or parameters violate a precondition."""
    exit_code = 2


class InvariantViolationError(TregError):
    """Raised when an internal invariant fails to hold."""
    exit_code = 3


class DivergenceError(InvariantViolationError):
    """Raised when an optimization run produces non-finite or runaway coordinates."""

    def __init__(self, message: str, step: int = -1):
        super().__init__(message)
        self.step = step


EXIT_SUCCESS = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_INVARIANT_VIOLATION = 3
