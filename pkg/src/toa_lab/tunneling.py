"""Barrier traversal times by three independent routes, plus conjugacy checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from enum import Enum
import numpy as np

from .errors import DerivativeUnavailable
from .kernels import TimeKernel, barrier_kernel_piece, free_kernel, _central_diff
from .numerics import (
    PrincipalValueSpec,
    bessel_j0,
    gauss_legendre,
    integrate,
    integrate_oscillatory,
    integrate_pv,
)
from .ordering import deform, resolve
from .potentials import PhysicalConfig, SquareBarrier, evaluate, kappa_o
from .wavepackets import (
    GaussianPacket,
    check_leakage,
    momentum_density,
    overlap_phi,
    p_amp,
)

# half-width of the momentum window, in units of the momentum spread 1/(2 sigma)
WINDOW_SIGMAS = 20.0
# Phi(zeta) below this is treated as zero in the coordinate route
PHI_CUTOFF = 1e-18


class Route(str, Enum):
    COORDINATE = "CoordinateKernel"
    MOMENTUM = "MomentumQR"
    EIGEN = "Eigenfunction"


@dataclass(frozen=True)
class TunnelTimeReport:
    delta_tau: float
    Q: float
    R: float
    tau_trav: float
    route: Route
    err_est: float

    def to_json(self):
        d = asdict(self)
        d["route"] = self.route.value
        return d


def _window(pkt):
    half = WINDOW_SIGMAS / (2.0 * pkt.sigma)
    return pkt.k0 - half, pkt.k0 + half


def _tol(cfg):
    return cfg.tol


# ---------------------------------------------------------------------------
# Coordinate-kernel route
# ---------------------------------------------------------------------------

def delta_tau_coordinate(pkt: GaussianPacket, V: SquareBarrier, cfg: PhysicalConfig,
                         check_support: bool = True) -> TunnelTimeReport:
    """(mu L / hbar) Im int_0^inf e^{i k0 zeta} [1 - J0(kappa zeta)] Phi(zeta) d zeta."""
    if check_support:
        check_leakage(pkt, -V.a)
    kap = kappa_o(V, cfg)
    L = V.L
    if pkt.k0 == 0 or kap == 0 or L == 0:
        return TunnelTimeReport(0.0, math.nan, math.nan, math.nan, Route.COORDINATE, 0.0)

    def f(z):
        return (1.0 - bessel_j0(kap * z)) * overlap_phi(pkt, z)

    zmax = pkt.sigma * math.sqrt(-8.0 * math.log(PHI_CUTOFF))
    # |1 - J0| <= 2, so the dropped tail is bounded by 2 int_zmax^inf Phi
    tail = 2.0 * pkt.sigma * math.sqrt(2 * math.pi) * 0.5 * math.erfc(zmax / (2 * math.sqrt(2) * pkt.sigma))
    res = integrate_oscillatory(f, pkt.k0, 0.0, _tol(cfg), omega=kap, cutoff=zmax, tail_bound=tail)
    pref = cfg.mu * L / cfg.hbar
    return TunnelTimeReport(
        delta_tau=float(pref * res.value.imag),
        Q=math.nan,
        R=math.nan,
        tau_trav=math.nan,
        route=Route.COORDINATE,
        err_est=float(pref * res.err_est),
    )


# ---------------------------------------------------------------------------
# Momentum Q/R route
# ---------------------------------------------------------------------------

def _pv_over_k(density, lo, hi, tol, scale):
    """PV int density(k)/k dk over [lo, hi]; excision only if 0 is inside."""
    def g(k):
        return density(k) / k

    if lo < 0 < hi:
        width = 0.25 * min(-lo, hi, scale)
        return integrate_pv(g, lo, hi, PrincipalValueSpec(0.0, width), tol)
    return integrate(g, lo, hi, tol)


def _cosh_band(density, kap, lo, hi, tol):
    """int_0^inf density(kap cosh u) du restricted to kap cosh u inside [lo, hi]."""
    if hi <= kap:
        return 0.0, 0.0
    u_hi = math.acosh(hi / kap)
    u_lo = math.acosh(lo / kap) if lo > kap else 0.0
    res = integrate(lambda u: density(kap * np.cosh(u)), u_lo, u_hi, tol)
    return float(res.value), float(res.err_est)


def delta_tau_momentum(pkt: GaussianPacket, V: SquareBarrier, cfg: PhysicalConfig) -> TunnelTimeReport:
    """Delta tau = (L / nu0)(Q - R) evaluated in wavenumber space.

    Internally the pre-division form (mu L / hbar)(Q/k0 - R/k0) is used so
    that k0 = 0 is handled without a 0/0.
    """
    kap = kappa_o(V, cfg)
    L = V.L
    tol = _tol(cfg)
    lo, hi = _window(pkt)
    dens = lambda k: momentum_density(pkt, k)
    q_hat = _pv_over_k(dens, lo, hi, tol, 1.0 / pkt.sigma)
    if kap == 0:
        r_hat_val, r_err = float(q_hat.value), float(q_hat.err_est)
        trav_val, _ = _transmitted_free(dens, lo, hi, tol)
    else:
        plus, plus_err = _cosh_band(dens, kap, lo, hi, tol)
        minus, minus_err = _cosh_band(lambda k: dens(-k), kap, -hi, -lo, tol)
        r_hat_val = plus - minus
        r_err = plus_err + minus_err
        trav_val, _ = plus, plus_err
    pref = cfg.mu * L / cfg.hbar
    k0 = pkt.k0
    return TunnelTimeReport(
        delta_tau=float(pref * (q_hat.value - r_hat_val)),
        Q=float(k0 * q_hat.value),
        R=float(k0 * r_hat_val),
        tau_trav=float(pref * trav_val),
        route=Route.MOMENTUM,
        err_est=float(pref * (q_hat.err_est + r_err)),
    )


def _transmitted_free(dens, lo, hi, tol):
    if lo <= 0:
        return math.inf, math.inf
    r = integrate(lambda k: dens(k) / k, lo, hi, tol)
    return float(r.value), float(r.err_est)


# ---------------------------------------------------------------------------
# Eigenfunction route
# ---------------------------------------------------------------------------

def _phase_factor_conj(p, pc, L, hbar):
    """f*(p) for the barrier phase factor (unimodular above pc, 1 below)."""
    p = np.abs(np.asarray(p, float))
    arg = np.sqrt(np.maximum(p * p - pc * pc, 0.0))
    return np.where(p >= pc, np.exp(1j * L * arg / hbar), 1.0 + 0j)


def delta_tau_eigen(pkt: GaussianPacket, V: SquareBarrier, cfg: PhysicalConfig) -> TunnelTimeReport:
    """Delta tau assembled sector by sector from the eigenfunction phase factors.

    Within each momentum sign s the free-minus-barrier first moment reduces to
    -(mu hbar / i) int dp |psi(p)|^2 / |p| g(p) dg*/dp with
    g = exp(i|p|L/hbar) f(p). The exp(i|p|L) part gives mu L int |psi|^2/p
    (combined over both sectors into a principal value). The f part lives on
    |p| > pc and is evaluated with p = s pc cosh u, where df*/du is taken by
    finite differences of the phase factor itself.
    """
    mu, hbar = cfg.mu, cfg.hbar
    L = V.L
    pc = math.sqrt(2.0 * mu * V.V0)
    tol = _tol(cfg)
    klo, khi = _window(pkt)
    plo, phi = hbar * klo, hbar * khi

    def density(p):
        return np.abs(p_amp(pkt, p, cfg)) ** 2

    first = _pv_over_k(density, plo, phi, tol, hbar / pkt.sigma)
    if pc == 0 or L == 0:
        # f then cancels the free phase exactly
        q = float(pkt.k0 * hbar * first.value)
        return TunnelTimeReport(0.0, q, q, math.nan, Route.EIGEN, 0.0)
    total = mu * L * float(first.value)
    err = mu * L * float(first.err_est)

    for sign in (1.0, -1.0):
        a, b = (plo, phi) if sign > 0 else (-phi, -plo)
        if b <= pc:
            continue
        u_lo = math.acosh(a / pc) if a > pc else 0.0
        u_hi = math.acosh(b / pc)

        def fstar(u, sign=sign):
            # continued oddly through u = 0 so the stencil sees sinh u, not |sinh u|
            val = _phase_factor_conj(sign * pc * np.cosh(u), pc, L, hbar)
            return np.where(np.asarray(u) < 0, np.conj(val), val)

        def integrand(u, sign=sign, fstar=fstar):
            u = np.asarray(u, float)
            p = sign * pc * np.cosh(u)
            h = np.minimum(1e-3, 0.02 * hbar / (L * np.abs(p) + hbar))
            dfstar = _central_diff(fstar, u, 1, h)
            return (density(p) / np.abs(p) * np.conj(fstar(u)) * dfstar).imag

        # the negative sector runs from u = inf down to 0, hence the sign
        r = integrate(integrand, u_lo, u_hi, tol)
        total += -mu * hbar * sign * float(r.value)
        err += mu * hbar * float(r.err_est)

    k0 = pkt.k0
    q_hat = hbar * float(first.value)
    pref = mu * L / hbar
    r_hat = q_hat - total / pref if pref else math.nan
    return TunnelTimeReport(
        delta_tau=float(total),
        Q=float(k0 * q_hat),
        R=float(k0 * r_hat),
        tau_trav=math.nan,
        route=Route.EIGEN,
        err_est=float(err),
    )


# ---------------------------------------------------------------------------
# Ordering invariance and conjugacy
# ---------------------------------------------------------------------------

def ordering_invariance_check(rule, V: SquareBarrier, cfg: PhysicalConfig, n_grid: int = 25) -> dict:
    """Max deviation between deformed and undeformed free / region-III kernels."""
    rule = resolve(rule)
    eta = np.linspace(-3.0 * max(V.a, 1.0), -V.a, n_grid)
    zeta = np.linspace(-4.0, 4.0, n_grid)
    E, Z = np.meshgrid(eta, zeta, indexing="ij")
    out = {}
    for name, kern in (("free", free_kernel()), ("region_III", barrier_kernel_piece(V, "III", cfg))):
        deformed = deform(rule, kern)
        out[name] = float(np.max(np.abs(deformed(E, Z) - kern(E, Z))))
    out["max_abs_deviation"] = max(out["free"], out["region_III"])
    return out


@dataclass(frozen=True)
class GaussianTest:
    """exp(-(q - center)^2 / 4 width^2 + i k q), with analytic second derivative."""

    center: float
    width: float
    k: float = 0.0

    def __call__(self, q):
        q = np.asarray(q, float)
        return np.exp(-((q - self.center) ** 2) / (4 * self.width**2) + 1j * self.k * q)

    def second_derivative(self, q):
        q = np.asarray(q, float)
        s = -(q - self.center) / (2 * self.width**2) + 1j * self.k
        return (s * s - 1.0 / (2 * self.width**2)) * self(q)

    def support(self, n=9.0):
        return self.center - n * self.width, self.center + n * self.width


def teccr_defect(T: TimeKernel, V, phi: GaussianTest, psi: GaussianTest, cfg: PhysicalConfig,
                 n_eta: int = 160) -> complex:
    """<phi|[H, T]|psi> - i hbar <phi|psi> from the kernel double integral.

    In eta = (q+q')/2, zeta = q - q' the sgn(q - q') factor only flips the
    sign between zeta > 0 and zeta < 0, so both half-planes are integrated
    separately over smooth integrands.
    """
    lo = min(phi.support()[0], psi.support()[0])
    hi = max(phi.support()[1], psi.support()[1])
    if isinstance(V, SquareBarrier):
        for edge in (-V.a, -V.b):
            if lo < edge < hi:
                raise DerivativeUnavailable("test-function support crosses a barrier edge")
    k = cfg.hbar**2 / (2 * cfg.mu)

    def H(g, q):
        return -k * g.second_derivative(q) + evaluate(V, q) * g(q)

    x, w = gauss_legendre(n_eta)
    eta = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
    weta = 0.5 * (hi - lo) * w

    def half_plane(zeta):
        zeta = np.asarray(zeta, float)[:, None]
        out = 0.0
        for s in (1.0, -1.0):
            z = s * zeta
            q = eta[None, :] + 0.5 * z
            qp = eta[None, :] - 0.5 * z
            kern = T(eta[None, :] + 0.0 * z, z)
            val = np.conj(H(phi, q)) * kern * psi(qp) - np.conj(phi(q)) * kern * H(psi, qp)
            out = out + s * val
        return (out @ weta) * cfg.mu / (1j * cfg.hbar)

    zmax = hi - lo
    comm = integrate(half_plane, 0.0, zmax, cfg.tol)
    overlap = integrate(lambda q: np.conj(phi(q)) * psi(q), lo, hi, cfg.tol)
    return complex(comm.value - 1j * cfg.hbar * overlap.value)
