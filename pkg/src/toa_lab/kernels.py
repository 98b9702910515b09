"""Time-kernel factors T(eta, zeta) and their validators.

A kernel is stored in centre/relative coordinates eta = (q + q')/2 and
zeta = q - q'. The operator kernel is (mu / i hbar) T(eta, zeta) sgn(q - q').
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DerivativeUnavailable, NonConvergence, NotAnalytic, WrongVariant
from .numerics import bessel_i0, bessel_j0, gauss_legendre, hyp0f1_1, integrate
from .potentials import (
    Free,
    PhysicalConfig,
    SquareBarrier,
    derivative,
    evaluate,
    heaviside,
    is_analytic,
    kappa_o,
    poly_coeffs,
)


class Provenance(str, Enum):
    WEYL_INTEGRAL = "weyl_integral"
    CLOSED_FORM = "closed_form"
    DEFORMED = "deformed"
    SUPRA_CORRECTED = "supra_corrected"


class Region(str, Enum):
    I = "I"
    II = "II"
    III = "III"


# finite-difference settings for kernels without analytic derivatives
FD_MIN_STEP = 1e-4
FD_REL_STEP = 1e-3
FD_MAX_ORDER = 4

_FD_STENCILS = {
    1: (np.array([1, -8, 0, 8, -1]) / 12.0, 1),
    2: (np.array([-1, 16, -30, 16, -1]) / 12.0, 2),
    3: (np.array([1, -8, 13, 0, -13, 8, -1]) / 8.0, 3),
    4: (np.array([-1, 12, -39, 56, -39, 12, -1]) / 6.0, 4),
}


def _central_diff(g, x, order, h):
    """4th-order central difference plus one Richardson step (h, h/2)."""
    weights, power = _FD_STENCILS[order]
    half = (len(weights) - 1) // 2
    offsets = np.arange(-half, half + 1)

    def d(step):
        return sum(w * g(x + o * step) for w, o in zip(weights, offsets) if w != 0) / step**power

    return (16.0 * d(h / 2) - d(h)) / 15.0


@dataclass(frozen=True)
class TimeKernel:
    evaluator: Callable
    provenance: Provenance
    region: Region | None = None
    eta_derivative: Callable | None = None
    label: str = ""
    differentiable: bool = True
    metadata: dict = field(default_factory=dict, compare=False)

    def __call__(self, eta, zeta):
        eta, zeta = np.broadcast_arrays(np.asarray(eta, float), np.asarray(zeta, float))
        return np.asarray(self.evaluator(eta, zeta), dtype=float)[()]

    def derivative(self, order: int, eta, zeta):
        """d^order T / d eta^order, analytic when available."""
        eta, zeta = np.broadcast_arrays(np.asarray(eta, float), np.asarray(zeta, float))
        if order == 0:
            return self(eta, zeta)
        if self.eta_derivative is not None:
            return np.asarray(self.eta_derivative(order, eta, zeta), dtype=float)[()]
        if not self.differentiable:
            raise DerivativeUnavailable(
                f"kernel {self.label!r} is piecewise across region edges"
            )
        if order > FD_MAX_ORDER:
            raise DerivativeUnavailable(
                f"finite differences only supported up to order {FD_MAX_ORDER}"
            )
        h = np.maximum(FD_MIN_STEP, FD_REL_STEP * np.abs(eta))
        return _central_diff(lambda e: self(e, zeta), eta, order, h)[()]


def zero_kernel(region=None, label="zero", metadata=None):
    return TimeKernel(
        evaluator=lambda eta, zeta: np.zeros(np.broadcast(eta, zeta).shape),
        provenance=Provenance.SUPRA_CORRECTED,
        region=region,
        eta_derivative=lambda order, eta, zeta: np.zeros(np.broadcast(eta, zeta).shape),
        label=label,
        metadata=metadata or {},
    )


def free_kernel() -> TimeKernel:
    return TimeKernel(
        evaluator=lambda eta, zeta: 0.5 * eta + 0.0 * zeta,
        provenance=Provenance.CLOSED_FORM,
        eta_derivative=_linear_eta_derivative,
        label="free",
    )


def _linear_eta_derivative(order, eta, zeta):
    shape = np.broadcast(eta, zeta).shape
    return np.full(shape, 0.5) if order == 1 else np.zeros(shape)


# ---------------------------------------------------------------------------
# Weyl kernel of polynomial potentials
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _unit_integral(ks: tuple, es: tuple) -> Fraction:
    """Exact value of int_0^1 prod_k (1 - t^k)^{e_k} dt."""
    poly = [1]
    for k, e in zip(ks, es):
        factor = [0] * (k * e + 1)
        for i in range(e + 1):
            factor[k * i] = math.comb(e, i) * (-1) ** i
        out = [0] * (len(poly) + len(factor) - 1)
        for i, a in enumerate(poly):
            if a:
                for j, b in enumerate(factor):
                    if b:
                        out[i + j] += a * b
        poly = out
    return sum(Fraction(c, i + 1) for i, c in enumerate(poly) if c)


def _compositions(m, parts):
    if parts == 1:
        yield (m,)
        return
    for first in range(m + 1):
        for rest in _compositions(m - first, parts - 1):
            yield (first,) + rest


class WeylSeries:
    """T^W(eta, zeta) = 1/2 sum_m c^m / (m!)^2 P_m(eta), c = mu zeta^2 / 2 hbar^2.

    P_m(eta) = int_0^eta (V(eta) - V(s))^m ds is a polynomial in eta built
    from the Maclaurin coefficients of V. Substituting s = t eta gives
    P_m = sum over multinomial terms of prod a_k^{e_k} eta^{1 + sum k e_k}
    times an exact rational integral over t.
    """

    MAX_TERMS = 160

    def __init__(self, coeffs, cfg: PhysicalConfig):
        self.coeffs = tuple(float(c) for c in coeffs)
        self.cfg = cfg
        self.ks = tuple(k for k in range(1, len(self.coeffs)) if self.coeffs[k] != 0)
        self.degree = max(self.ks) if self.ks else 0
        self._P = []

    def P(self, m):
        while len(self._P) <= m:
            self._P.append(self._build(len(self._P)))
        return self._P[m]

    def _build(self, m):
        if m == 0:
            return np.array([0.0, 1.0])
        if not self.ks:
            return np.zeros(1)
        out = np.zeros(self.degree * m + 2)
        for es in _compositions(m, len(self.ks)):
            mult = math.factorial(m)
            coef = 1.0
            power = 1
            for k, e in zip(self.ks, es):
                mult //= math.factorial(e)
                coef *= self.coeffs[k] ** e
                power += k * e
            out[power] += float(mult) * coef * float(_unit_integral(self.ks, es))
        return out

    def _scale(self, eta):
        """Bound on |V(eta) - V(s)| for s between 0 and eta."""
        grid = eta[..., None] * np.linspace(0.0, 1.0, 33)
        v = np.polynomial.polynomial.polyval(grid, self.coeffs)
        ve = np.polynomial.polynomial.polyval(eta, self.coeffs)
        return np.max(np.abs(ve[..., None] - v), axis=-1)

    def derivative(self, order, eta, zeta):
        eta, zeta = np.broadcast_arrays(np.asarray(eta, float), np.asarray(zeta, float))
        c = self.cfg.mu * zeta**2 / (2.0 * self.cfg.hbar**2)
        if not self.ks:
            return 0.5 * np.polynomial.polynomial.polyval(
                eta, np.polynomial.polynomial.polyder([0.0, 1.0], order)
            ) if order <= 1 else np.zeros(eta.shape)
        z = float(np.max(np.abs(c) * self._scale(eta))) if eta.size else 0.0
        m_min = max(int(math.ceil((order - 1) / self.degree)), int(math.sqrt(z)) + 2)
        total = np.zeros(eta.shape)
        cm = np.ones(eta.shape)
        small = 0
        for m in range(self.MAX_TERMS):
            if m > 0:
                cm = cm * c / (m * m)
            p = self.P(m)
            if order > 0:
                p = np.polynomial.polynomial.polyder(p, order) if len(p) > order else np.zeros(1)
            term = cm * np.polynomial.polynomial.polyval(eta, p)
            total = total + term
            if m >= m_min:
                tmax = np.max(np.abs(term)) if term.size else 0.0
                smax = np.max(np.abs(total)) if total.size else 0.0
                if tmax <= 1e-17 * smax or (smax == 0 and tmax == 0):
                    small += 1
                    if small >= 2:
                        return 0.5 * total
                else:
                    small = 0
        raise NonConvergence("Weyl kernel series did not converge", estimate=0.5 * total)


_GL32 = gauss_legendre(32)
_GL64 = gauss_legendre(64)


def _weyl_quadrature(V, cfg, eta, zeta):
    """1/2 int_0^eta 0F1(;1; mu zeta^2 (V(eta) - V(s)) / 2 hbar^2) ds by Gauss-Legendre.

    The 32- and 64-point rules are compared per point; any point where they
    disagree beyond tolerance is redone with the adaptive integrator.
    """
    eta = np.asarray(eta, float)
    zeta = np.asarray(zeta, float)
    c = cfg.mu * zeta**2 / (2.0 * cfg.hbar**2)
    ve = evaluate(V, eta)

    def rule(xw):
        x, w = xw
        s = eta[..., None] * 0.5 * (1.0 + x)
        g = hyp0f1_1(c[..., None] * (ve[..., None] - evaluate(V, s)))
        return 0.5 * eta * 0.5 * np.sum(w * g, axis=-1)

    lo = rule(_GL32)
    hi = rule(_GL64)
    tol = cfg.tol
    bad = np.abs(hi - lo) > np.maximum(tol.abs_tol, tol.rel_tol * np.abs(hi))
    if np.any(bad):
        for idx in zip(*np.nonzero(bad)) if hi.ndim else [()]:
            e, cc, v = float(eta[idx]), float(c[idx]), float(ve[idx])
            r = integrate(lambda s: hyp0f1_1(cc * (v - evaluate(V, s))), 0.0, e, tol)
            if hi.ndim:
                hi[idx] = 0.5 * r.value
            else:
                hi = np.asarray(0.5 * r.value)
    return hi


def weyl_kernel(V, cfg: PhysicalConfig) -> TimeKernel:
    """Weyl-ordered kernel for an analytic (polynomial) potential."""
    if isinstance(V, Free):
        return TimeKernel(
            evaluator=lambda eta, zeta: 0.5 * eta + 0.0 * zeta,
            provenance=Provenance.WEYL_INTEGRAL,
            eta_derivative=_linear_eta_derivative,
            label="weyl/free",
        )
    if not is_analytic(V):
        raise NotAnalytic("use barrier_kernel_piece for the square barrier")
    series = WeylSeries(poly_coeffs(V), cfg)
    return TimeKernel(
        evaluator=lambda eta, zeta: _weyl_quadrature(V, cfg, eta, zeta),
        provenance=Provenance.WEYL_INTEGRAL,
        eta_derivative=series.derivative,
        label=f"weyl/{type(V).__name__.lower()}",
        metadata={"series": series},
    )


# ---------------------------------------------------------------------------
# Square barrier
# ---------------------------------------------------------------------------

def _require_barrier(V):
    if not isinstance(V, SquareBarrier):
        raise WrongVariant("expected a SquareBarrier")


def barrier_kernel_piece(V: SquareBarrier, region, cfg: PhysicalConfig) -> TimeKernel:
    _require_barrier(V)
    region = Region(region)
    kap = kappa_o(V, cfg)
    b, L = V.b, V.L
    if region is Region.I:
        def ev(eta, zeta):
            return 0.5 * eta + 0.0 * zeta
    elif region is Region.II:
        def ev(eta, zeta):
            return 0.5 * (eta + b) - 0.5 * b * bessel_i0(kap * np.abs(zeta))
    else:
        def ev(eta, zeta):
            return 0.5 * (eta + L) - 0.5 * L * bessel_j0(kap * np.abs(zeta))
    return TimeKernel(
        evaluator=ev,
        provenance=Provenance.CLOSED_FORM,
        region=region,
        eta_derivative=_linear_eta_derivative,
        label=f"weyl/barrier/{region.value}",
    )


def barrier_kernel_stitched(V: SquareBarrier, cfg: PhysicalConfig) -> TimeKernel:
    """All three pieces joined with step functions (not differentiable in eta)."""
    pieces = {r: barrier_kernel_piece(V, r, cfg) for r in Region}
    a, b = V.a, V.b

    def ev(eta, zeta):
        return (
            heaviside(-eta - a) * pieces[Region.III](eta, zeta)
            + (heaviside(eta + a) - heaviside(eta + b)) * pieces[Region.II](eta, zeta)
            + heaviside(eta + b) * pieces[Region.I](eta, zeta)
        )

    return TimeKernel(
        evaluator=ev,
        provenance=Provenance.CLOSED_FORM,
        label="weyl/barrier/stitched",
        differentiable=False,
    )


# ---------------------------------------------------------------------------
# Supraquantized corrections
# ---------------------------------------------------------------------------

def supra_correction_n1(V, T_base: TimeKernel, cfg: PhysicalConfig) -> TimeKernel:
    """Leading correction (mu/24 hbar^2) int_0^eta ds V'''(s) int_0^zeta dw w^3 G T_base(s, w)."""
    if isinstance(V, SquareBarrier):
        return supra_correction_chain(V, 1, cfg)
    if not is_analytic(V):
        raise NotAnalytic("supra corrections need an analytic potential")
    if len(poly_coeffs(V)) <= 3:
        return zero_kernel(label="supra1/zero", metadata={"reason": "third derivative vanishes"})
    pref = cfg.mu / (24.0 * cfg.hbar**2)
    half_c = cfg.mu / (2.0 * cfg.hbar**2)

    def at_point(eta, zeta, n_nodes):
        x, wts = gauss_legendre(n_nodes)
        s = 0.5 * eta * (1.0 + x)
        ws = 0.5 * eta * wts
        w = 0.5 * zeta * (1.0 + x)
        ww = 0.5 * zeta * wts
        S, W = np.meshgrid(s, w, indexing="ij")
        G = hyp0f1_1(half_c * (zeta**2 - W**2) * (evaluate(V, eta) - evaluate(V, S)))
        inner = (W**3 * G * T_base(S, W)) @ ww
        return pref * np.sum(ws * derivative(V, s, 3) * inner)

    def ev(eta, zeta):
        eta, zeta = np.broadcast_arrays(eta, zeta)
        out = np.empty(eta.shape)
        for idx in np.ndindex(eta.shape):
            e, z = float(eta[idx]), float(zeta[idx])
            lo = at_point(e, z, 48)
            hi = at_point(e, z, 96)
            if abs(hi - lo) > max(cfg.tol.abs_tol, 1e2 * cfg.tol.rel_tol * abs(hi)):
                raise NonConvergence("nested quadrature for the supra correction", hi, abs(hi - lo))
            out[idx] = hi
        return out

    return TimeKernel(
        evaluator=ev,
        provenance=Provenance.SUPRA_CORRECTED,
        label="supra1",
    )


# Weyl barrier pieces are (eta + const)/2 - const * Bessel(zeta): degree 1 in s.
_WEYL_PIECE_DEGREE = {Region.I: 1, Region.II: 1, Region.III: 1}
# pieces of the lower-order kernel that each region's s-integral passes through
_REGION_PATH = {
    Region.I: (Region.I,),
    Region.II: (Region.I, Region.II),
    Region.III: (Region.I, Region.II, Region.III),
}


def supra_correction_chain(V: SquareBarrier, n: int, cfg: PhysicalConfig) -> TimeKernel:
    """n-th order correction for the square barrier, evaluated distributionally.

    V^{(2r+1)} is a combination of delta^{(2r)} at the edges, so each term of
    the recurrence reduces, after 2r integrations by parts, to the 2r-th
    s-derivative of the w-integrated lower-order piece. That derivative
    vanishes exactly when the piece has polynomial degree below 2r in s.
    The degrees are tracked order by order; every step is logged.
    """
    _require_barrier(V)
    if n < 1:
        raise ValueError("n must be at least 1")
    # degree[order][region]; -1 encodes the zero polynomial
    degree = {0: dict(_WEYL_PIECE_DEGREE)}
    log = []
    for order in range(1, n + 1):
        degree[order] = {}
        for region in Region:
            nonzero = False
            for r in range(1, order + 1):
                for piece in _REGION_PATH[region]:
                    deg = degree[order - r][piece]
                    vanishes = deg < 2 * r
                    log.append({
                        "order": order,
                        "region": region.value,
                        "r": r,
                        "piece": piece.value,
                        "piece_degree": deg,
                        "derivatives_taken": 2 * r,
                        "vanishes": vanishes,
                    })
                    nonzero = nonzero or not vanishes
            if nonzero:
                raise NotImplementedError("non-vanishing distributional term")
            degree[order][region] = -1
    return zero_kernel(
        label=f"supra{n}/barrier",
        metadata={"derivation_log": log, "order": n},
    )


# ---------------------------------------------------------------------------
# Validators
# ---------------------------------------------------------------------------

TKE_STEP = 1e-3


def _kernel_qq(T, q, qp):
    return T(0.5 * (q + qp), q - qp)


def tke_residual(T: TimeKernel, V, q: float, qp: float, cfg: PhysicalConfig, h: float = TKE_STEP) -> float:
    """-(hbar^2/2mu) T_qq + (hbar^2/2mu) T_q'q' + (V(q) - V(q')) T at (q, q')."""
    if isinstance(V, SquareBarrier):
        reach = 4 * h
        for x in (q, qp):
            for edge in (-V.a, -V.b):
                if abs(x - edge) <= reach:
                    raise DerivativeUnavailable("stencil crosses a barrier edge")
    q = np.asarray(float(q))
    qp = np.asarray(float(qp))
    d2q = _central_diff(lambda x: _kernel_qq(T, x, qp), q, 2, h)
    d2qp = _central_diff(lambda x: _kernel_qq(T, q, x), qp, 2, h)
    k = cfg.hbar**2 / (2.0 * cfg.mu)
    dv = float(evaluate(V, q)) - float(evaluate(V, qp))
    return float(-k * d2q + k * d2qp + dv * _kernel_qq(T, q, qp))


def boundary_defects(T: TimeKernel, points) -> dict:
    """Max deviation from T(eta, 0) = eta/2 and from T(0, zeta) = 0."""
    x = np.asarray(points, float)
    return {
        "diagonal": float(np.max(np.abs(T(x, 0.0) - 0.5 * x))),
        "antidiagonal": float(np.max(np.abs(T(0.0, x)))),
    }


def hermiticity_defect(T: TimeKernel, eta, zeta) -> float:
    return float(np.max(np.abs(T(eta, zeta) - T(eta, -np.asarray(zeta)))))
