"""Ordering functions and the deformation of Weyl kernels into other orderings."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidRule, UnknownRule, UnsupportedCombination
from .kernels import Provenance, TimeKernel
from .numerics import hyp0f1
from .potentials import Free, Harmonic, Linear, PhysicalConfig

DEFAULT_TRUNCATION = 20


@dataclass(frozen=True)
class OrderingRule:
    """Theta(x) = sum_j alpha[j] x^j, even with Theta(0) = 1.

    ``truncation`` is the number of even-order terms kept when deforming.
    """

    name: str
    alpha: tuple
    truncation: int = DEFAULT_TRUNCATION

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if not alpha or alpha[0] != 1.0:
            raise InvalidRule("alpha[0] must equal 1")
        odd = [j for j in range(1, len(alpha), 2) if alpha[j] != 0.0]
        if odd:
            raise InvalidRule(f"odd coefficients must vanish, got nonzero at {odd}")
        if self.truncation < 1:
            raise InvalidRule("truncation must be positive")

    def even_coeff(self, n):
        j = 2 * n
        return self.alpha[j] if j < len(self.alpha) else 0.0

    def theta(self, x):
        x = np.asarray(x, dtype=float)
        return np.polynomial.polynomial.polyval(x, self.alpha[: 2 * self.truncation + 1])

    def to_json(self):
        return {"name": self.name, "alpha": list(self.alpha)}

    @classmethod
    def from_json(cls, block):
        return cls(name=block.get("name", "custom"), alpha=tuple(block["alpha"]),
                   truncation=int(block.get("truncation", DEFAULT_TRUNCATION)))


def _series(n_terms, coeff):
    alpha = [0.0] * (2 * n_terms + 1)
    for n in range(n_terms + 1):
        alpha[2 * n] = coeff(n)
    return tuple(alpha)


BUILTIN_NAMES = ("weyl", "born_jordan", "simple_symmetric")


def builtin(name: str, truncation: int = DEFAULT_TRUNCATION) -> OrderingRule:
    if name == "weyl":
        return OrderingRule("weyl", (1.0,), truncation)
    if name == "born_jordan":
        # sinc(x/2) = sum (-1)^n (x/2)^{2n} / (2n+1)!
        return OrderingRule(
            "born_jordan",
            _series(truncation, lambda n: (-1) ** n / (4.0**n * math.factorial(2 * n + 1))),
            truncation,
        )
    if name == "simple_symmetric":
        return OrderingRule(
            "simple_symmetric",
            _series(truncation, lambda n: (-1) ** n / (4.0**n * math.factorial(2 * n))),
            truncation,
        )
    raise UnknownRule(name)


def resolve(rule) -> OrderingRule:
    """Accept a rule, a builtin name or a JSON block."""
    if isinstance(rule, OrderingRule):
        return rule
    if isinstance(rule, str):
        return builtin(rule)
    if isinstance(rule, dict):
        return OrderingRule.from_json(rule)
    raise InvalidRule(f"cannot interpret ordering rule {rule!r}")


def deform(rule: OrderingRule, T_weyl: TimeKernel) -> TimeKernel:
    """Apply Theta(-i zeta d/d eta) to a Weyl kernel.

    Only even orders survive, each contributing alpha_{2n} (-1)^n zeta^{2n}
    times the 2n-th eta derivative. The j = 0 term is kept separate so that
    kernels whose higher derivatives vanish come back bit-for-bit unchanged.
    """
    rule = resolve(rule)

    def correction(order, eta, zeta):
        rest = np.zeros(np.broadcast(eta, zeta).shape)
        z2 = np.asarray(zeta, float) ** 2
        quiet = 0
        for n in range(1, rule.truncation + 1):
            a = rule.even_coeff(n)
            if a == 0.0:
                continue
            term = a * (-1) ** n * z2**n * T_weyl.derivative(2 * n + order, eta, zeta)
            rest = rest + term
            tmax = float(np.max(np.abs(term))) if term.size else 0.0
            ref = float(np.max(np.abs(rest))) if rest.size else 0.0
            if tmax <= 1e-17 * ref or tmax == 0.0:
                quiet += 1
                if quiet >= 2:
                    break
            else:
                quiet = 0
        return rest

    def ev(eta, zeta):
        return T_weyl(eta, zeta) + correction(0, eta, zeta)

    def deta(order, eta, zeta):
        return T_weyl.derivative(order, eta, zeta) + correction(order, eta, zeta)

    return TimeKernel(
        evaluator=ev,
        provenance=Provenance.DEFORMED,
        region=T_weyl.region,
        eta_derivative=deta if (T_weyl.eta_derivative is not None) else None,
        label=f"{rule.name}({T_weyl.label})",
        differentiable=T_weyl.differentiable,
    )


def _sinhc(x):
    x = np.asarray(x, float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0 + x**4 / 120.0, np.sinh(safe) / safe)


def _bj_linear(eta, zeta, c):
    """(1/4 zeta)[x^2 F3(c x) - y^2 F3(c y)], x,y = eta +- zeta/2, cancellation-free."""
    x = eta + 0.5 * zeta
    y = eta - 0.5 * zeta
    direct_ok = np.abs(zeta) >= 0.1
    safe = np.where(direct_ok, zeta, 1.0)
    direct = (x * x * hyp0f1(3, c * x) - y * y * hyp0f1(3, c * y)) / (4.0 * safe)
    # x^p - y^p = zeta * sum_i x^i y^(p-1-i), summed term by term
    total = np.zeros(np.shape(eta))
    cm = np.ones(np.shape(eta))
    for m in range(200):
        if m > 0:
            cm = cm * c / ((m + 2) * m)
        p = m + 2
        inner = sum(x**i * y ** (p - 1 - i) for i in range(p))
        term = cm * inner
        total = total + term
        if m > 5 and np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return np.where(direct_ok, direct, 0.25 * total)


def closed_form_kernel(rule, V, eta, zeta, cfg: PhysicalConfig | None = None):
    """Textbook kernels for linear and harmonic potentials under the three builtin orderings."""
    cfg = cfg or PhysicalConfig()
    name = rule.name if isinstance(rule, OrderingRule) else str(rule)
    if name not in BUILTIN_NAMES:
        raise UnsupportedCombination(f"no closed form for ordering {name!r}")
    eta, zeta = np.broadcast_arrays(np.asarray(eta, float), np.asarray(zeta, float))
    mu, hbar = cfg.mu, cfg.hbar
    if isinstance(V, Free):
        return (0.5 * eta)[()]
    if isinstance(V, Linear):
        c = mu * V.lam * zeta**2 / (2.0 * hbar**2)
        if name == "weyl":
            out = 0.5 * eta * hyp0f1(2, c * eta)
        elif name == "born_jordan":
            out = _bj_linear(eta, zeta, c)
        else:
            x = eta + 0.5 * zeta
            y = eta - 0.5 * zeta
            out = 0.25 * x * hyp0f1(2, c * x) + 0.25 * y * hyp0f1(2, c * y)
        return np.asarray(out)[()]
    if isinstance(V, Harmonic):
        w = mu * V.omega / hbar
        weyl = 0.5 * eta * _sinhc(w * eta * zeta)
        if name == "weyl":
            out = weyl
        elif name == "born_jordan":
            out = _sinhc(0.5 * w * zeta**2) * weyl
        else:
            out = np.cosh(0.5 * w * zeta**2) * weyl
        return np.asarray(out)[()]
    raise UnsupportedCombination(f"no closed form for {type(V).__name__}")
