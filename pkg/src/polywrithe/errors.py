"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the domain of an operation (antipodal pair,
    self-intersecting polygon, parameter out of range, ...)."""


class HypothesisError(DomainError):
    """A hypothesis of a writhe-difference or bound formula is violated."""


class NumericalIntegrityError(ArithmeticError):
    """A result that should be structurally exact (e.g. an integer linking
    number) came out too far from its expected form."""


class ConvergenceError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance.

    Attributes
    ----------
    estimate : float
        Best available estimate of the integral.
    error : float
        Error indicator accompanying ``estimate``.
    """

    def __init__(self, message, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
