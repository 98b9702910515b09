"""TOA eigenfunctions in momentum space, their position densities and completeness."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import sici

from .errors import DomainError
from .kernels import _central_diff
from .numerics import _gk15, gauss_legendre, integrate
from .potentials import PhysicalConfig, SquareBarrier, heaviside

# default converging factor exp(-eps p^2) for position densities
DEFAULT_EPSILON = 0.05


class Kind(str, Enum):
    NON_NODAL = "NonNodal"
    NODAL = "Nodal"


def _kind(kind):
    return Kind(kind) if not isinstance(kind, Kind) else kind


def critical_momentum(V: SquareBarrier, cfg: PhysicalConfig) -> float:
    return math.sqrt(2.0 * cfg.mu * V.V0)


def free_eigenfunction(kind, tau, p, cfg: PhysicalConfig):
    p = np.asarray(p, dtype=float)
    amp = np.sqrt(np.abs(p) / (2 * cfg.mu)) / math.sqrt(2 * math.pi * cfg.hbar)
    out = amp * np.exp(1j * p * p * tau / (2 * cfg.mu * cfg.hbar))
    if _kind(kind) is Kind.NODAL:
        out = out * np.sign(p)
    return out[()]


def barrier_phase_factor(p, V: SquareBarrier, cfg: PhysicalConfig):
    """f(p): exp(-i |p| L sqrt(1 - pc^2/p^2) / hbar) above pc, 1 below."""
    p = np.abs(np.asarray(p, dtype=float))
    pc = critical_momentum(V, cfg)
    arg = np.sqrt(np.maximum(p * p - pc * pc, 0.0))
    return np.where(p >= pc, np.exp(-1j * V.L * arg / cfg.hbar), 1.0 + 0j)[()]


def barrier_eigenfunction(kind, tau, p, V: SquareBarrier, cfg: PhysicalConfig):
    p = np.asarray(p, dtype=float)
    free = free_eigenfunction(kind, tau, p, cfg)
    return (free * np.exp(1j * np.abs(p) * V.L / cfg.hbar) * barrier_phase_factor(p, V, cfg))[()]


@dataclass(frozen=True)
class ToaEigenfunction:
    kind: Kind
    tau: float
    cfg: PhysicalConfig
    barrier: SquareBarrier | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", _kind(self.kind))

    def __call__(self, p):
        if self.barrier is None:
            return free_eigenfunction(self.kind, self.tau, p, self.cfg)
        return barrier_eigenfunction(self.kind, self.tau, p, self.barrier, self.cfg)

    def with_tau(self, tau):
        return ToaEigenfunction(self.kind, tau, self.cfg, self.barrier)


def position_density(efn: ToaEigenfunction, q, eps: float = DEFAULT_EPSILON, cfg: PhysicalConfig | None = None):
    """|int dp (2 pi hbar)^{-1/2} e^{ipq/hbar} Phi(tau, p) e^{-eps p^2}|^2.

    Both momentum signs are folded onto p = +-t^2, which removes the sqrt|p|
    kink at the origin; the integral is cut where exp(-eps p^2) < 1e-18.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    cfg = cfg or efn.cfg
    q = np.asarray(q, dtype=float)
    shape = q.shape
    qf = q.ravel()
    pmax = math.sqrt(-math.log(1e-18) / eps)
    pts = []
    if efn.barrier is not None:
        pc = critical_momentum(efn.barrier, cfg)
        if 0 < pc < pmax:
            pts.append(math.sqrt(pc))
    norm = 1.0 / math.sqrt(2 * math.pi * cfg.hbar)

    def g(t):
        t = np.asarray(t, float)[:, None]
        p = t * t
        damp = np.exp(-eps * p * p) * 2 * t * norm
        plus = efn(p) * np.exp(1j * p * qf[None, :] / cfg.hbar)
        minus = efn(-p) * np.exp(-1j * p * qf[None, :] / cfg.hbar)
        return damp * (plus + minus)

    res = integrate(g, 0.0, math.sqrt(pmax), cfg.tol, points=pts)
    return (np.abs(res.value) ** 2).reshape(shape)[()]


def _support_window(g, h, hbar, span=200.0, n=40001):
    p = np.linspace(-span, span, n) * hbar
    mag = np.maximum(np.abs(g(p)), np.abs(h(p)))
    keep = np.flatnonzero(mag > 1e-17 * mag.max())
    step = p[1] - p[0]
    return p[keep[0]] - step, p[keep[-1]] + step


def _sector_amplitudes(fn, V, cfg, sign, p_lo, p_hi, n_nodes):
    """Energy nodes, weights and alpha(E) = sqrt(mu) fn(p) e^{i|p|L} f(p) / sqrt|p| on one sign."""
    lo = max(0.0, p_lo if sign > 0 else -p_hi)
    hi = p_hi if sign > 0 else -p_lo
    if hi <= lo:
        return None
    e_lo, e_hi = lo * lo / (2 * cfg.mu), hi * hi / (2 * cfg.mu)
    x, w = gauss_legendre(n_nodes)
    E = 0.5 * (e_lo + e_hi) + 0.5 * (e_hi - e_lo) * x
    wE = 0.5 * (e_hi - e_lo) * w

    def alpha(energy):
        energy = np.asarray(energy, float)
        valid = (energy > e_lo) & (energy < e_hi)
        pm = np.sqrt(2 * cfg.mu * np.where(valid, energy, e_lo + 1.0))
        p = sign * pm
        val = math.sqrt(cfg.mu) * fn(p) / np.sqrt(pm)
        if V is not None:
            val = val * np.exp(1j * pm * V.L / cfg.hbar) * barrier_phase_factor(p, V, cfg)
        return np.where(valid, val, 0.0)

    return E, wE, alpha, (e_lo, e_hi)


def completeness_defect(V: SquareBarrier | None, g, h, cfg: PhysicalConfig, T: float = 200.0,
                        window=None, n_energy: int = 160):
    """Smeared completeness defect <g| sum_alpha int_{-T}^{T} |tau><tau| d tau |h> - <g|h>.

    The tau integral is done in closed form, 2 sin(T Omega)/Omega with
    Omega = (p'^2 - p^2)/(2 mu hbar). Opposite-sign pairs drop out through the
    1 + sgn p sgn p' factor. Within a sign sector the momenta are traded for
    energies E = p^2/2mu, which turns the double smearing integral into
    (1/2 pi hbar) int dx D_T(x) C(x) with C the cross-correlation of the
    energy amplitudes and D_T(x) = 2 hbar sin(T x / hbar)/x. The singular part
    C(0) D_T is integrated exactly through the sine integral; the remainder
    (C(x) - C(0)) D_T(x) is smooth and summed on panels two periods wide.
    """
    hbar = cfg.hbar
    if window is None:
        window = _support_window(g, h, hbar)
    p_lo, p_hi = window
    total = 0j
    sectors = [(_sector_amplitudes(g, V, cfg, sign, p_lo, p_hi, n_energy),
                _sector_amplitudes(h, V, cfg, sign, p_lo, p_hi, n_energy)) for sign in (1.0, -1.0)]
    sectors = [(ga, ha) for ga, ha in sectors if ga is not None]

    def sq_norm(k):
        return sum(np.sum(np.abs(pair[k][2](pair[k][0])) ** 2 * pair[k][1]) for pair in sectors)

    # |C(x)| is bounded by ||g|| ||h||; lags where it falls below 1e-16 of that are dropped
    floor = 1e-16 * math.sqrt(sq_norm(0) * sq_norm(1))
    for ga, ha in sectors:
        E, wE, alpha_g, (e_lo, e_hi) = ga
        _, _, alpha_h, _ = ha
        ag = np.conj(alpha_g(E)) * wE

        def corr(x):
            x = np.asarray(x, float)
            out = np.empty(x.shape, complex)
            flat, res = x.ravel(), out.reshape(-1)
            for i in range(0, flat.size, 4096):
                xs = flat[i:i + 4096]
                res[i:i + 4096] = (ag[None, :] * alpha_h(E[None, :] + xs[:, None])).sum(axis=1)
            return out

        X = e_hi - e_lo
        c0 = corr(np.array([0.0]))[0]
        probe = np.linspace(-X, X, 801)
        mag = np.abs(corr(probe))
        live = np.flatnonzero(mag > floor)
        if not live.size:
            continue
        X = min(X, float(np.max(np.abs(probe[live]))) + 2 * X / 800)
        singular = c0 * 2 * hbar * 2 * sici(T * X / hbar)[0]

        def remainder(x):
            return (corr(x) - c0) / x * 2 * hbar * np.sin(T * x / hbar)

        period = 2 * math.pi * hbar / T
        n_half = max(8, int(math.ceil(X / (2 * period))) * 2)
        edges = np.linspace(0.0, X, n_half + 1)
        edges = np.concatenate([-edges[::-1], edges[1:]])
        est, _ = _gk15(remainder, edges[:-1], edges[1:])
        total += (singular + est.sum()) / (2 * math.pi * hbar)
    overlap = integrate(lambda p: np.conj(g(p)) * h(p), p_lo, p_hi, cfg.tol, points=[0.0])
    return complex(total - overlap.value)


def apply_barrier_toa_momentum(phi, V: SquareBarrier, cfg: PhysicalConfig, guard: float = 0.05,
                               step: float = 5e-4):
    """Return p -> (T_B phi)(p) for the barrier arrival-time operator in momentum space.

    -(mu/2)[(i hbar/p) phi' + i hbar (phi/p)' + (2L/p) phi]
    + (mu L/p)(1 - pc^2/p^2)^{-1/2} H(|p| - pc) phi, with phi' by finite
    differences. Evaluating inside |p| < guard raises DomainError.
    """
    mu, hbar, L = cfg.mu, cfg.hbar, V.L
    pc = critical_momentum(V, cfg)

    def applied(p):
        p = np.asarray(p, dtype=float)
        if np.any(np.abs(p) < guard):
            raise DomainError(f"momentum inside the guard band |p| < {guard}")
        f = phi(p)
        df = _central_diff(phi, p, 1, step * hbar)
        first = -0.5 * mu * (2j * hbar * df / p - 1j * hbar * f / (p * p) + 2 * L * f / p)
        above = np.abs(p) > pc
        ratio = np.where(above, 1.0 - pc * pc / np.where(above, p * p, 1.0), 1.0)
        second = np.where(above, mu * L / p / np.sqrt(ratio) * f, 0.0)
        if pc == 0 or L == 0:
            second = mu * L / p * f * heaviside(np.abs(p) - pc)
        return (first + second)[()]

    return applied
