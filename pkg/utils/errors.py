"""
Exception hierarchy for the Time-Change Lab.

Every failure the lab can signal derives from ``LabError``; the CLI maps the
``exit_code`` attribute onto the process exit status.
"""


class LabError(Exception):
    """Base class for all lab errors."""

    exit_code = 1


# Model validation

class NonSubMarkovian(LabError, ValueError):
    """Generator has negative off-diagonal rates or positive row sums."""


class NotTransient(LabError, ValueError):
    """-Q is singular or its inverse has negative entries."""


class NotIrreducible(LabError, ValueError):
    """Graph of positive off-diagonal rates is not strongly connected."""


class OutOfDomain(LabError, ValueError):
    """A point lies outside the state space."""


# Numerics

class SingularSystem(LabError, ArithmeticError):
    """A linear system could not be solved to tolerance."""


class QuadratureFailure(LabError, ArithmeticError):
    """A quadrature produced non-finite values."""


class ValidationFailed(LabError, RuntimeError):
    """An internal consistency check exceeded its tolerance."""


class CounterexampleFound(LabError, RuntimeError):
    """A randomized audit found a violation of a proven property."""


# Measures

class BadParameters(LabError, ValueError):
    """Measure or sequence parameters are invalid."""


# Experiments

class HypothesisFailed(LabError, RuntimeError):
    """The hypotheses of the requested convergence theorem do not hold."""

    exit_code = 3


class ModeMismatch(LabError, ValueError):
    """Semigroup convergence mode is incompatible with the sequence."""


class ExtensionFailed(LabError, RuntimeError):
    """A function on F could not be extended to a C0 function on X."""


# Command line

class ConfigError(LabError, ValueError):
    """Run configuration is malformed."""

    exit_code = 2


class CheckFailed(LabError, RuntimeError):
    """A structural check failed."""

    exit_code = 3


class ToleranceExceeded(LabError, RuntimeError):
    """A Monte Carlo estimate is outside its z-score gate."""

    exit_code = 3
