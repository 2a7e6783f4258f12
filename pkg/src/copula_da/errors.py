"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class NumericalError(ArithmeticError):
    """Raised when a linear-algebra step fails (e.g. a Cholesky factorization)."""


class DatasetError(ValueError):
    """Raised when a dataset file cannot be loaded or split."""
