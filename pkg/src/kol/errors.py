"""Exception types shared across the package.

Everything raised on purpose derives from KolError so callers can catch
library failures without swallowing genuine bugs (TypeError etc.).
"""
from __future__ import annotations


class KolError(Exception):
    """Base class for all errors raised deliberately by this package."""


class DomainError(KolError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class PoleError(DomainError):
    """The requested value sits on a pole (e.g. Kummer's M with b a
    nonpositive integer)."""


class AccuracyError(KolError, ArithmeticError):
    """The algorithm could not certify the requested tolerance.

    Carries the best available value in ``partial`` (may be None) so callers
    can inspect what was achieved before the bailout.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class InvalidSpecError(KolError, ValueError):
    """A rate specification (or similar declarative input) is malformed."""


class SimulationError(KolError, RuntimeError):
    """A Monte Carlo sample produced a non-finite state.

    ``sample_index`` and ``step_index`` locate the failure.
    """

    def __init__(self, message: str, sample_index: int = -1, step_index: int = -1):
        super().__init__(message)
        self.sample_index = sample_index
        self.step_index = step_index


class ConfigurationError(KolError, ValueError):
    """A run configuration is inconsistent or outside the supported regime."""


class SchemeError(KolError, ArithmeticError):
    """The numerical scheme violated one of its guaranteed properties
    (positivity, mass accounting) beyond tolerance."""


class InsufficientDataError(KolError, ValueError):
    """Not enough data points to perform the requested estimate."""


class EmptyEstimateError(InsufficientDataError):
    """No usable observations at all (e.g. every sample censored)."""


class UnsupportedDataError(KolError, ValueError):
    """The estimator does not support this kind of data (e.g. censored
    observations in an exact-distance computation)."""
