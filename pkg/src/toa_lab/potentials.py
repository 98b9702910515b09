"""Potential models, physical constants and the classical arrival time."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import NotAnalytic, WrongVariant
from .numerics import DEFAULT_TOL, Tolerance, integrate


@dataclass(frozen=True)
class PhysicalConfig:
    mu: float = 1.0
    hbar: float = 1.0
    tol: Tolerance = field(default_factory=Tolerance)

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    def momentum(self, k):
        return self.hbar * np.asarray(k)

    def wavenumber(self, p):
        return np.asarray(p) / self.hbar


def heaviside(x):
    """Step function with H(0) = 1/2."""
    return np.heaviside(x, 0.5)


def sgn(x):
    return np.sign(x)


@dataclass(frozen=True)
class Free:
    pass


@dataclass(frozen=True)
class Linear:
    lam: float


@dataclass(frozen=True)
class Harmonic:
    """mu omega^2 q^2 / 2; the mass is part of the model so evaluate needs no config."""

    omega: float
    mu: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")


@dataclass(frozen=True)
class Polynomial:
    """sum_n coeffs[n] q^n, used for generic analytic test potentials."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))


@dataclass(frozen=True)
class SquareBarrier:
    """Height V0 on -a < q < -b, zero elsewhere.

    The barrier sits to the left of the arrival point q = 0. V0 = 0 and a = b
    are accepted as degenerate limits.
    """

    V0: float
    a: float
    b: float

    def __post_init__(self):
        if self.V0 < 0:
            raise ValueError("V0 must be non-negative")
        if not (0 <= self.b <= self.a):
            raise ValueError("barrier geometry requires 0 <= b <= a")

    @classmethod
    def from_edge(cls, V0, left_edge, width):
        """Barrier occupying [left_edge, left_edge + width] (both negative)."""
        return cls(V0=V0, a=-left_edge, b=-(left_edge + width))

    @property
    def L(self):
        return self.a - self.b


Potential = Union[Free, Linear, Harmonic, Polynomial, SquareBarrier]


def evaluate(V: Potential, q):
    q = np.asarray(q, dtype=float)
    if isinstance(V, Free):
        out = np.zeros_like(q)
    elif isinstance(V, Linear):
        out = V.lam * q
    elif isinstance(V, Harmonic):
        out = 0.5 * V.mu * V.omega**2 * q * q
    elif isinstance(V, Polynomial):
        out = np.polynomial.polynomial.polyval(q, V.coeffs)
    elif isinstance(V, SquareBarrier):
        out = V.V0 * (heaviside(q + V.a) - heaviside(q + V.b))
    else:
        raise WrongVariant(f"unknown potential {V!r}")
    return out[()]


def _poly_coeffs(V):
    if isinstance(V, Free):
        return (0.0,)
    if isinstance(V, Linear):
        return (0.0, float(V.lam))
    if isinstance(V, Harmonic):
        return (0.0, 0.0, 0.5 * V.mu * V.omega**2)
    if isinstance(V, Polynomial):
        return V.coeffs
    raise NotAnalytic(f"{type(V).__name__} has no Maclaurin expansion")


def is_analytic(V):
    return not isinstance(V, SquareBarrier)


def taylor_coeff(V: Potential, n: int) -> float:
    if n < 0:
        raise ValueError("n must be non-negative")
    c = _poly_coeffs(V)
    return c[n] if n < len(c) else 0.0


def poly_coeffs(V: Potential) -> tuple:
    """All non-trivial Maclaurin coefficients (trailing zeros stripped)."""
    c = list(_poly_coeffs(V))
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c)


def derivative(V: Potential, q, order: int = 1):
    """d^order V / dq^order for analytic variants."""
    c = np.polynomial.polynomial.polyder(np.array(_poly_coeffs(V)), order)
    return np.polynomial.polynomial.polyval(np.asarray(q, dtype=float), c)[()]


def kappa_o(V: Potential, cfg: PhysicalConfig) -> float:
    if not isinstance(V, SquareBarrier):
        raise WrongVariant("kappa_o is defined for square barriers only")
    return math.sqrt(2.0 * cfg.mu * V.V0) / cfg.hbar


@dataclass(frozen=True)
class NonArrival:
    """Typed outcome: the classical trajectory turns back before q = 0."""

    turning_point: float | None = None


def _breakpoints(V):
    if isinstance(V, SquareBarrier):
        return [-V.a, -V.b]
    return []


def classical_toa(V: Potential, q: float, p: float, cfg: PhysicalConfig):
    """Classical arrival time at the origin, or NonArrival."""
    if p == 0:
        raise ValueError("p must be non-zero")
    q = float(q)
    if q == 0:
        return 0.0
    H = p * p / (2 * cfg.mu) + float(evaluate(V, q))
    lo, hi = min(q, 0.0), max(q, 0.0)
    inner = [x for x in _breakpoints(V) if lo < x < hi]
    grid = np.unique(np.concatenate([np.linspace(lo, hi, 2001), inner,
                                     np.nextafter(inner, -np.inf),
                                     np.nextafter(inner, np.inf)]))
    kin = H - evaluate(V, grid)
    band = 1e-12 * max(abs(H), 1.0)
    bad = kin <= band
    if np.any(bad):
        return NonArrival(turning_point=float(grid[np.argmax(bad)]))

    def f(s):
        return 1.0 / np.sqrt(H - evaluate(V, s))

    res = integrate(f, 0.0, q, cfg.tol if cfg.tol else DEFAULT_TOL, points=inner)
    return float(-np.sign(p) * math.sqrt(cfg.mu / 2.0) * res.value)


def to_json(V: Potential) -> dict:
    if isinstance(V, Free):
        return {"type": "free"}
    if isinstance(V, Linear):
        return {"type": "linear", "lam": V.lam}
    if isinstance(V, Harmonic):
        return {"type": "harmonic", "omega": V.omega}
    if isinstance(V, Polynomial):
        return {"type": "polynomial", "coeffs": list(V.coeffs)}
    if isinstance(V, SquareBarrier):
        return {"type": "square_barrier", "V0": V.V0, "a": V.a, "b": V.b}
    raise WrongVariant(f"unknown potential {V!r}")


def from_json(block: dict, mu: float = 1.0) -> Potential:
    kind = block.get("type")
    rest = {k: v for k, v in block.items() if k != "type"}
    if kind == "free":
        return Free(**rest)
    if kind == "linear":
        return Linear(**rest)
    if kind == "harmonic":
        return Harmonic(mu=mu, **rest)
    if kind == "polynomial":
        return Polynomial(**rest)
    if kind == "square_barrier":
        return SquareBarrier(**rest)
    raise WrongVariant(f"unknown potential type {kind!r}")
