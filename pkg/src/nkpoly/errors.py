"""Exception and warning types shared across the package."""

from __future__ import annotations


class NKError(Exception):
    """Base class for all package errors."""


class PoleError(NKError, ValueError):
    """A Gamma function or Pochhammer denominator was evaluated at a pole."""


class ConstraintError(NKError, ValueError):
    """Parameters violate a family or identity constraint."""


class DomainError(NKError, ValueError):
    """Evaluation point outside the domain of a series or operator."""


class LogarithmicCaseError(NKError, ValueError):
    """Antidifferentiation hit an exponent of exactly -1."""


class ShiftMismatchError(NKError, ValueError):
    """Two series centred at different base points were combined."""


class TermCountError(NKError, OverflowError):
    """A product would exceed the configured term cap."""


class DivergentMomentError(NKError, ValueError):
    """A Gamma-moment integral has a non-positive Gamma argument."""


class UnsupportedConstructionError(NKError, ValueError):
    """The requested construction path does not exist for a family."""


class UnknownIdentityError(NKError, KeyError):
    """Identity id not present in the catalog."""


class ConfigError(NKError, ValueError):
    """Suite configuration could not be parsed or validated."""


class AccuracyError(NKError, RuntimeError):
    """Adaptive integration did not reach the requested tolerance."""

    def __init__(self, message: str, estimate: complex, error: float):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ConvergenceWarning(RuntimeWarning):
    """A non-terminating series hit its term cap before the decay test passed."""
