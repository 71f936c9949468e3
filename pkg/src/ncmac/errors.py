"""Exception types shared across the package."""


class InvalidDimensionsError(ValueError):
    """Raised when (T, M) or codebook sizes are inconsistent."""


class InvalidInputError(ValueError):
    """Shape or argument mismatch between a constellation and a gradient set."""


class PreconditionError(ValueError):
    """A cost is evaluated outside of its domain of validity (e.g. T < (K+1)M)."""


class DegenerateRetractionError(ArithmeticError):
    """X + Z is rank deficient, so the QR retraction is not defined."""


class CoincidentCodewordError(ArithmeticError):
    """Two hypotheses are (numerically) indistinguishable.

    ``pair`` carries whatever identifies the offending pair, so callers can
    report it.
    """

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair
