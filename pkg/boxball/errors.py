"""
Box-Ball Toolkit - Error Types
==============================

One exception family for the whole package so the CLI can map failures
to exit codes without knowing which module raised them.
"""

from typing import Optional


class BoxBallError(Exception):
    """Base class for every error raised by boxball."""


class WindowError(BoxBallError):
    """A site range does not cover what the operation needs."""


class LightConeError(BoxBallError):
    """Growing the window would exceed the configured site cap."""


class NotFoundError(BoxBallError):
    """A requested soliton, index or slot is not realized."""


class CapabilityError(BoxBallError):
    """The (q, k) pair is outside the closed-form domain."""

    def __init__(self, message: str, hypothesis: str = ""):
        super().__init__(message)
        self.hypothesis = hypothesis


class DomainError(BoxBallError):
    """A parameter is outside its admissible domain."""


class ToleranceError(BoxBallError):
    """A numerical iteration did not converge."""


class CapacityError(BoxBallError):
    """Truncation level or retry budget exhausted."""


class IdentityViolation(BoxBallError):
    """
    An exact identity failed.

    Carries the identity name and a counterexample configuration in the
    `@origin bits` text format so the failure can be replayed.
    """

    def __init__(self, identity: str, message: str, counterexample: Optional[str] = None):
        super().__init__(f"{identity}: {message}")
        self.identity = identity
        self.counterexample = counterexample or ""
