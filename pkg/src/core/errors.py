"""
Error hierarchy for the toolkit
"""


class MeixnerError(Exception):
    """Base class for every error raised by the toolkit."""


class MeixnerInputError(MeixnerError, ValueError):
    """The caller supplied data the operation cannot accept."""


class MeixnerNumericalError(MeixnerError, ArithmeticError):
    """A numerical consistency check failed while computing."""


class IndexOutOfRange(MeixnerInputError):
    pass


class ConflictingEntry(MeixnerInputError):
    """Two permutation-equivalent tensor entries carry different values."""


class DimensionMismatch(MeixnerInputError):
    pass


class NotOrthogonal(MeixnerInputError):
    pass


class SingularCovariance(MeixnerInputError):
    pass


class InvalidParam(MeixnerInputError):
    pass


class OutOfDomain(MeixnerInputError):
    """Point lies outside the Laplace-transform domain."""


class DomainError(MeixnerInputError):
    """Integral diverges for the requested argument."""


class DimensionNot3(MeixnerInputError):
    pass


class InputError(MeixnerInputError):
    """Malformed input file or argument value."""


class PivotInconsistency(MeixnerNumericalError):
    """Moment recursion gave different values for different pivot coordinates."""

    def __init__(self, index, values):
        self.index = tuple(index)
        self.values = dict(values)
        super().__init__(f"pivot values disagree at {self.index}: {self.values}")


class DegreeCapExceeded(MeixnerNumericalError):
    pass


class IllConditioned(MeixnerNumericalError):
    pass


class RankDeficientFit(MeixnerNumericalError):
    pass
