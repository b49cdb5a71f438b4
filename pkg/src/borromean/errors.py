"""Exception types shared across the solver."""

from __future__ import annotations


class BorromeanError(Exception):
    """Base class for all solver errors."""


class DomainError(BorromeanError, ValueError):
    """An argument lies outside the domain where a closed form is valid."""


class PoleAtHalf(DomainError):
    """The threshold line 1/(1 - 2 v0) diverges at v0 = 1/2."""


class ConvergenceError(BorromeanError, RuntimeError):
    def __init__(self, message: str, bracket: tuple[float, float] | None = None):
        super().__init__(message)
        self.bracket = bracket


class PoleProximity(BorromeanError, ArithmeticError):
    """tau = eta/(eta - 1) evaluated too close to its pole at eta = 1."""

    def __init__(self, message: str, eta: complex):
        super().__init__(message)
        self.eta = eta


class InternalDomainError(BorromeanError, AssertionError):
    """A kernel invariant that should hold by construction was violated."""


class SingularFactorization(BorromeanError, ArithmeticError):
    """LU factorization hit an exactly zero pivot."""


class NoBorromeanState(BorromeanError):
    """No three-body state survives just above the two-body threshold line."""


class InsufficientPoints(BorromeanError, ValueError):
    pass


class WrongSpace(BorromeanError, ValueError):
    pass


class AliasingError(BorromeanError):
    def __init__(self, message: str, suggested_resolution: int | None = None):
        super().__init__(message)
        self.suggested_resolution = suggested_resolution


class ProvenanceError(BorromeanError, ValueError):
    """An output file was read without its configuration block."""
