"""Exception types shared across the package.

The CLI maps these onto process exit codes: ValidationError -> 2,
I/O failures -> 3, NumericError -> 4.
"""


class ValidationError(ValueError):
    """Rejected input: a parameter, shape, or configuration violates a contract."""


class NumericError(RuntimeError):
    """A numerically impossible or degenerate situation that is not a user input error."""

    def __init__(self, message, gamma=None):
        super().__init__(message)
        self.gamma = gamma
