"""
Box-Ball Toolkit
================

Exact dynamics, soliton bookkeeping and random initial conditions for
the box-ball system on Z, with Monte Carlo checks of tagged-soliton
asymptotics.
"""

__version__ = "0.1.0"

from boxball.errors import (  # noqa: E402
    BoxBallError,
    CapabilityError,
    CapacityError,
    DomainError,
    IdentityViolation,
    LightConeError,
    NotFoundError,
    ToleranceError,
    WindowError,
)
from boxball.lattice import Configuration, evolve, evolve_inverse, evolve_n, records  # noqa: E402

__all__ = [
    "__version__",
    "BoxBallError",
    "CapabilityError",
    "CapacityError",
    "DomainError",
    "IdentityViolation",
    "LightConeError",
    "NotFoundError",
    "ToleranceError",
    "WindowError",
    "Configuration",
    "evolve",
    "evolve_inverse",
    "evolve_n",
    "records",
]
