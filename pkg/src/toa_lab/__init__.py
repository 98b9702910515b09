"""Time-of-arrival operators, barrier traversal times and arrival-time distributions."""

__version__ = "0.1.0"

from .errors import (BesselOverflow, DerivativeUnavailable, DomainError, FlatDistribution,
                     InsufficientCapture, InvalidRule, NonConvergence, NotAnalytic, ToaLabError,
                     UnknownRule, UnsupportedCombination, WrongVariant)
from .numerics import Tolerance
from .ordering import OrderingRule, builtin, deform
from .potentials import Free, Harmonic, Linear, PhysicalConfig, Polynomial, SquareBarrier
from .wavepackets import GaussianPacket

__all__ = [
    "__version__",
    "BesselOverflow", "DerivativeUnavailable", "DomainError", "FlatDistribution",
    "InsufficientCapture", "InvalidRule", "NonConvergence", "NotAnalytic", "ToaLabError",
    "UnknownRule", "UnsupportedCombination", "WrongVariant",
    "Tolerance", "OrderingRule", "builtin", "deform",
    "Free", "Harmonic", "Linear", "PhysicalConfig", "Polynomial", "SquareBarrier",
    "GaussianPacket",
]
