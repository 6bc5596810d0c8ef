"""Exception types shared across the package."""


class MultdecError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(MultdecError, ValueError):
    """Invalid or inconsistent parameters (bad modulus, degree too large, ...)."""


class FieldTooSmallError(MultdecError, ValueError):
    """The prime field has too few elements for a required hitting set.

    Signals that the parameter set needs a larger prime; extension fields
    are out of scope.
    """


class InfeasibleThresholdError(MultdecError, ValueError):
    """A decoding threshold violates the agreement precondition.

    Carries the computed bound so callers can re-parameterize.
    """

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class EnumerationLimitError(MultdecError, ValueError):
    """An exhaustive enumeration would exceed the configured size guard."""


class InconsistentDerivativesError(MultdecError, ValueError):
    """A derivative family does not come from any single polynomial."""
