"""Exception hierarchy shared by the estimators, codelengths and CLI."""

from __future__ import annotations


class DomainError(ValueError):
    """A parameter or observation lies outside the support of a formula."""


class SampleError(ValueError):
    """A :class:`~mmlweibull.models.Sample` violates its censoring scheme."""


class EstimationError(RuntimeError):
    """Base class for estimator failures that are data-dependent, not bugs."""


class NoRoot(EstimationError):
    """The score equation has no root inside the shape bracket."""


class InsufficientData(EstimationError):
    """Too few (uncensored) observations for the requested estimator."""


class InsufficientUncensored(InsufficientData):
    pass


class OutOfRange(EstimationError):
    pass


class PhiOutOfRange(OutOfRange):
    """ML estimate of the uncensored probability is 0 or 1."""


class NonConvergence(EstimationError):
    pass


class IncompatibleScheme(ValueError):
    """Estimator or model requested for a censoring scheme it does not handle."""


class UnsupportedCombination(IncompatibleScheme):
    pass


class NonpositiveFisher(ArithmeticError):
    """Expected Fisher information determinant is not positive."""


class FisherPrecisionError(ArithmeticError):
    """The type II Fisher determinant sums did not evaluate to finite numbers."""


class ParseError(ValueError):
    """Malformed dataset file; ``line`` is 1-based, or None for whole-file problems."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
