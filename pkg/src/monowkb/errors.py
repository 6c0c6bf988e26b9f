"""Exception hierarchy.

CLI exit codes map onto these: ``DomainError`` -> 2, ``NumericalFailure`` -> 3,
``DegenerateTorusError`` -> 4.
"""


class MonoWkbError(Exception):
    """Base class for all package errors."""


class DomainError(MonoWkbError, ValueError):
    """Input outside the mathematical domain of an operation."""


class EmptyTorusError(DomainError):
    """The level set Lambda(E, P) is empty (P**2 >= E + B**2)."""


class PoleProximityError(DomainError):
    """A grid point or trajectory came too close to a coordinate pole."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class FoldRegionError(DomainError):
    """Evaluation requested inside a fold collar where the oscillatory form breaks down."""


class DegenerateTorusError(MonoWkbError):
    """A fold-only operation was forced on a pole-touching torus."""


class NumericalFailure(MonoWkbError, ArithmeticError):
    """A numerical tolerance could not be met."""


class InconsistencyError(NumericalFailure):
    """A closed-form expression left its domain of validity."""


class ResolutionError(NumericalFailure):
    """Sampling too coarse to follow a continuous quantity (e.g. a phase)."""
