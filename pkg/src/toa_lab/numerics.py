"""Special functions and quadrature engines.

Everything here is vectorised over numpy arrays. Integrands handed to the
quadrature routines must accept a 1-D array of abscissae and return either an
array of the same length or an array of shape ``(len(x), m)`` for
vector-valued integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import BesselOverflow, NonConvergence

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Tolerance:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 4000
    max_series_terms: int = 500

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be non-negative")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")
        if self.max_series_terms < 10:
            raise ValueError("max_series_terms must be at least 10")


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class PrincipalValueSpec:
    """Location of a simple pole and the initial half-width cut around it."""

    singularity: float
    excision_half_width: float

    def __post_init__(self):
        if not self.excision_half_width > 0:
            raise ValueError("excision_half_width must be positive")


class QuadResult(NamedTuple):
    value: float | complex | np.ndarray
    err_est: float | np.ndarray


# ---------------------------------------------------------------------------
# Confluent hypergeometric limit function and Bessel functions
# ---------------------------------------------------------------------------

# z below this is handed to the J0 machinery; the alternating series loses
# about log10(max term) digits and the max term grows like exp(2 sqrt|z|).
_SERIES_NEG_LIMIT = -9.0
_SERIES_POS_LIMIT = 400.0


def _series_0f1(b, z, max_terms):
    """Kahan-summed sum_m z^m / ((b)_m m!) for an array z."""
    z = np.asarray(z, dtype=float)
    total = np.ones_like(z)
    comp = np.zeros_like(z)
    term = np.ones_like(z)
    # terms grow until m ~ sqrt|z|, so never stop before that
    m_min = int(math.sqrt(float(np.max(np.abs(z)))) if z.size else 0) + 2
    for m in range(max_terms):
        term = term * z / ((b + m) * (m + 1.0))
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if m >= m_min and np.all(np.abs(term) <= 0.25 * _EPS * np.abs(total)):
            return total
    raise NonConvergence(
        f"0F1 series did not converge in {max_terms} terms", estimate=total
    )


def hyp0f1(b, z, tol: Tolerance = DEFAULT_TOL):
    """Plain power series for 0F1(;b;z).

    Intended for the moderate arguments of the closed-form kernels; for
    b = 1 use :func:`hyp0f1_1`, which switches to Bessel forms when the series
    would cancel.
    """
    z_arr = np.asarray(z, dtype=float)
    out = _series_0f1(float(b), z_arr.ravel(), tol.max_series_terms)
    return out.reshape(z_arr.shape)[()]


def hyp0f1_1(z, tol: Tolerance = DEFAULT_TOL):
    """0F1(;1;z) = I0(2 sqrt z) for z >= 0 and J0(2 sqrt(-z)) for z < 0."""
    z_arr = np.asarray(z, dtype=float)
    flat = z_arr.ravel()
    out = np.empty_like(flat)
    ser = (flat >= _SERIES_NEG_LIMIT) & (flat <= _SERIES_POS_LIMIT)
    if np.any(ser):
        out[ser] = _series_0f1(1.0, flat[ser], tol.max_series_terms)
    neg = flat < _SERIES_NEG_LIMIT
    if np.any(neg):
        out[neg] = bessel_j0(2.0 * np.sqrt(-flat[neg]))
    big = flat > _SERIES_POS_LIMIT
    if np.any(big):
        out[big] = _i0_asymptotic(2.0 * np.sqrt(flat[big]))
    return out.reshape(z_arr.shape)[()]


def _hankel_coeffs(n):
    """a_k(0) = prod_{j<=k} (-(2j-1)^2) / (k! 8^k), k = 0..n-1."""
    a = [1.0]
    for k in range(1, n):
        a.append(a[-1] * (-(2 * k - 1) ** 2) / (8.0 * k))
    return a


_HANKEL = _hankel_coeffs(60)


def _j0_asymptotic(x):
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    inv = 1.0 / x
    prev = np.full_like(x, np.inf)
    for k, a in enumerate(_HANKEL):
        term = a * inv**k
        mag = np.abs(term)
        # asymptotic series: stop at the smallest term
        if k > 2 and np.all((mag < 1e-17) | (mag > prev)):
            break
        prev = mag
        if k % 2 == 0:
            p += (-1) ** (k // 2) * term
        else:
            q += (-1) ** ((k - 1) // 2) * term
    chi = x - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _i0_asymptotic(x):
    s = np.zeros_like(x)
    inv = 1.0 / x
    for k, a in enumerate(_HANKEL):
        term = (-1) ** k * a * inv**k
        s += term
        if np.all(np.abs(term) < 1e-17 * np.abs(s)):
            break
    log_val = x - 0.5 * np.log(2.0 * np.pi * x) + np.log(s)
    if np.any(log_val > 709.78):
        raise BesselOverflow("I0 overflows double precision")
    return np.exp(log_val)


def _small_series(x, sign):
    """sum_m (sign x^2/4)^m/(m!)^2 for |x| < 1 (no cancellation there)."""
    z = sign * 0.25 * x * x
    total = np.ones_like(x)
    term = np.ones_like(x)
    for m in range(1, 30):
        term = term * z / (m * m)
        total += term
    return total


def _miller(x, modified):
    """Backward recurrence for J0 (or I0) on 1 <= x <= ~40.

    Normalised with J0 + 2 sum J_2k = 1, respectively I0 + 2 sum I_k = e^x.
    """
    xmax = float(np.max(x))
    n_start = int(xmax + 40 + 4 * math.sqrt(xmax))
    n_start += n_start % 2
    nxt = np.zeros_like(x)
    cur = np.full_like(x, 1e-280)
    norm = np.zeros_like(x)
    for n in range(n_start, 0, -1):
        if modified:
            prev = (2.0 * n / x) * cur + nxt
            norm += 2.0 * cur
        else:
            prev = (2.0 * n / x) * cur - nxt
            if n % 2 == 0:
                norm += 2.0 * cur
        nxt, cur = cur, prev
        big = np.abs(cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            cur *= scale
            nxt *= scale
            norm *= scale
    norm += cur
    if modified:
        return cur / norm * np.exp(x)
    return cur / norm


def bessel_j0(x):
    """J0(x) for real x.

    Power series below |x| = 1, Miller backward recurrence up to 25 and the
    Hankel asymptotic expansion beyond.
    """
    x_arr = np.abs(np.asarray(x, dtype=float))
    flat = x_arr.ravel()
    out = np.empty_like(flat)
    small = flat < 1.0
    mid = (flat >= 1.0) & (flat <= 25.0)
    large = flat > 25.0
    if np.any(small):
        out[small] = _small_series(flat[small], -1.0)
    if np.any(mid):
        out[mid] = _miller(flat[mid], modified=False)
    if np.any(large):
        out[large] = _j0_asymptotic(flat[large])
    return out.reshape(x_arr.shape)[()]


def bessel_i0(x):
    """I0(x) for real x; raises BesselOverflow past ~714."""
    x_arr = np.abs(np.asarray(x, dtype=float))
    flat = x_arr.ravel()
    out = np.empty_like(flat)
    small = flat < 1.0
    mid = (flat >= 1.0) & (flat <= 40.0)
    large = flat > 40.0
    if np.any(small):
        out[small] = _small_series(flat[small], 1.0)
    if np.any(mid):
        out[mid] = _miller(flat[mid], modified=True)
    if np.any(large):
        out[large] = _i0_asymptotic(flat[large])
    return out.reshape(x_arr.shape)[()]


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature
# ---------------------------------------------------------------------------

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XK_POS = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK_POS = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG_POS = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

XK15 = np.concatenate([-_XK_POS[:-1], _XK_POS[::-1]])
WK15 = np.concatenate([_WK_POS[:-1], _WK_POS[::-1]])
_G_IDX = np.array([1, 3, 5, 7, 9, 11, 13])
WG7 = np.concatenate([_WG_POS[:-1], _WG_POS[::-1]])


def _eval(f, x):
    y = np.asarray(f(x))
    if y.shape[:1] != x.shape:
        y = np.broadcast_to(y, x.shape + y.shape[x.ndim:] if y.ndim > x.ndim else x.shape)
    return y


def _gk15(f, a, b):
    """Kronrod estimate and QUADPACK-style error on each interval [a_i, b_i]."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = (c[:, None] + h[:, None] * XK15[None, :]).ravel()
    y = _eval(f, x)
    y = y.reshape((a.size, 15) + y.shape[1:])
    hh = h.reshape((-1,) + (1,) * (y.ndim - 2))
    kron = hh * np.tensordot(WK15, y, axes=([0], [1]))
    gauss = hh * np.tensordot(WG7, y[:, _G_IDX], axes=([0], [1]))
    mean = kron / (2.0 * hh)
    resasc = np.abs(hh) * np.tensordot(
        WK15, np.abs(y - mean[:, None]), axes=([0], [1])
    )
    resabs = np.abs(hh) * np.tensordot(WK15, np.abs(y), axes=([0], [1]))
    diff = np.abs(kron - gauss)
    with np.errstate(divide="ignore", invalid="ignore"):
        err = np.where(
            (resasc != 0) & (diff != 0),
            resasc * np.minimum(1.0, (200.0 * diff / resasc) ** 1.5),
            diff,
        )
    err = np.maximum(err, 50.0 * _EPS * resabs)
    return kron, err


def _scaled(y, jac):
    return y * jac.reshape((-1,) + (1,) * (y.ndim - 1))


def _map_infinite(f, lo, hi):
    """Return (g, t_lo, t_hi) with the integral of g over [t_lo, t_hi] finite."""
    if np.isfinite(lo) and np.isfinite(hi):
        return f, lo, hi
    if np.isfinite(lo):
        def g(t):
            return _scaled(_eval(f, lo + t / (1.0 - t)), 1.0 / (1.0 - t) ** 2)
        return g, 0.0, 1.0
    if np.isfinite(hi):
        def g(t):
            return _scaled(_eval(f, hi - t / (1.0 - t)), 1.0 / (1.0 - t) ** 2)
        return g, 0.0, 1.0

    def g(t):
        jac = (1.0 + t * t) / (1.0 - t * t) ** 2
        return _scaled(_eval(f, t / (1.0 - t * t)), jac)
    return g, -1.0, 1.0


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    tol: Tolerance = DEFAULT_TOL,
    *,
    points: Sequence[float] | None = None,
) -> QuadResult:
    """Adaptive 15-point Gauss-Kronrod integration of f over [lo, hi].

    Infinite limits are mapped onto finite intervals. ``points`` are extra
    breakpoints (kinks, peaks) that seed the initial partition. Vector-valued
    integrands are refined until every component meets the tolerance.
    Raises NonConvergence, carrying the best estimate, when the subdivision
    budget runs out.
    """
    lo = float(lo)
    hi = float(hi)
    if lo == hi:
        y = _eval(f, np.array([lo]))
        zero = np.zeros(y.shape[1:], dtype=y.dtype)[()]
        return QuadResult(zero, 0.0 * np.abs(zero))
    if lo > hi:
        res = integrate(f, hi, lo, tol, points=points)
        return QuadResult(-res.value, res.err_est)

    if points:
        inner = sorted(p for p in points if lo < p < hi)
    else:
        inner = []
    if inner and not (np.isfinite(lo) and np.isfinite(hi)):
        # split so the infinite pieces are handled separately
        edges = [lo] + inner + [hi]
        total = None
        err = None
        for a, b in zip(edges[:-1], edges[1:]):
            r = integrate(f, a, b, tol)
            total = r.value if total is None else total + r.value
            err = r.err_est if err is None else err + r.err_est
        return QuadResult(total, err)

    g, t_lo, t_hi = _map_infinite(f, lo, hi)
    edges = np.array([t_lo] + inner + [t_hi], dtype=float)
    a = edges[:-1].copy()
    b = edges[1:].copy()
    est, err = _gk15(g, a, b)
    while True:
        total = est.sum(axis=0)
        total_err = err.sum(axis=0)
        target = np.maximum(tol.abs_tol, tol.rel_tol * np.abs(total))
        if np.all(total_err <= target):
            return QuadResult(total[()], total_err[()])
        n = a.size
        if n >= tol.max_subdivisions:
            raise NonConvergence(
                f"subdivision budget {tol.max_subdivisions} exhausted "
                f"(err {np.max(total_err):.3e} > target {np.max(target):.3e})",
                estimate=total[()],
                err_est=total_err[()],
            )
        score = err / target
        if score.ndim > 1:
            score = score.reshape(n, -1).max(axis=1)
        width_ok = (b - a) > 8 * _EPS * np.maximum(np.abs(a), np.abs(b))
        pick = (score * n > 1.0) & width_ok
        if not np.any(pick):
            cand = np.where(width_ok, score, -np.inf)
            if not np.isfinite(cand.max()):
                raise NonConvergence(
                    "interval widths reached machine precision",
                    estimate=total[()],
                    err_est=total_err[()],
                )
            pick = cand == cand.max()
        # respect the budget
        idx = np.flatnonzero(pick)
        room = tol.max_subdivisions - n
        if idx.size > room:
            order = np.argsort(score[idx])[::-1]
            idx = idx[order[: max(room, 1)]]
        mid = 0.5 * (a[idx] + b[idx])
        new_a = np.concatenate([a[idx], mid])
        new_b = np.concatenate([mid, b[idx]])
        new_est, new_err = _gk15(g, new_a, new_b)
        keep = np.ones(n, dtype=bool)
        keep[idx] = False
        a = np.concatenate([a[keep], new_a])
        b = np.concatenate([b[keep], new_b])
        est = np.concatenate([est[keep], new_est])
        err = np.concatenate([err[keep], new_err])


def gauss_legendre(n):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    return np.polynomial.legendre.leggauss(n)


# ---------------------------------------------------------------------------
# Sequence acceleration
# ---------------------------------------------------------------------------

def wynn_epsilon(partial_sums):
    """Wynn's epsilon algorithm.

    Returns (estimate, err) where err is the spread of the two most recent
    highest-order even-column estimates.
    """
    s = [complex(v) for v in partial_sums]
    n = len(s)
    if n < 3:
        return s[-1], math.inf
    prev = [0j] * (n + 1)
    cur = list(s)
    estimates = [s[-1]]
    col = 0
    while len(cur) > 1:
        nxt = []
        for k in range(len(cur) - 1):
            d = cur[k + 1] - cur[k]
            if d == 0:
                # the sequence is exactly stationary here
                return cur[k + 1], 0.0
            nxt.append(prev[k + 1] + 1.0 / d)
        prev, cur = cur, nxt
        col += 1
        if col % 2 == 0 and len(cur) >= 1:
            estimates.append(cur[-1])
    if len(estimates) < 2:
        return estimates[-1], math.inf
    best = estimates[-1]
    err = abs(estimates[-1] - estimates[-2])
    return best, err


def richardson(values, ratio, powers):
    """Richardson table for values computed at h, h/ratio, h/ratio^2, ...

    ``powers`` lists the exponents of the error expansion in order. Returns
    (estimate, err) with err the change in the final diagonal step.
    """
    table = [list(values)]
    for j, p in enumerate(powers[: len(values) - 1]):
        fac = ratio**p
        row = table[-1]
        table.append(
            [(fac * row[i + 1] - row[i]) / (fac - 1.0) for i in range(len(row) - 1)]
        )
    best = table[-1][-1]
    if len(table) >= 2:
        err = abs(best - table[-2][-1])
    else:
        err = math.inf
    return best, err


# ---------------------------------------------------------------------------
# Principal values and oscillatory tails
# ---------------------------------------------------------------------------

def integrate_pv(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    spec: PrincipalValueSpec,
    tol: Tolerance = DEFAULT_TOL,
    *,
    points: Sequence[float] | None = None,
    max_halvings: int = 30,
) -> QuadResult:
    """Cauchy principal value of the integral of f over [lo, hi].

    The pole at ``spec.singularity`` is cut out symmetrically; the cut is
    halved repeatedly and the excision sequence is Richardson-extrapolated
    (its error expands in odd powers of the half-width).
    """
    c = float(spec.singularity)
    d0 = float(spec.excision_half_width)
    if not (lo < c - d0 and c + d0 < hi):
        raise ValueError("excision interval must lie inside the integration domain")
    pts = list(points or [])
    outer_l = integrate(f, lo, c - d0, tol, points=pts)
    outer_r = integrate(f, c + d0, hi, tol, points=pts)
    base = outer_l.value + outer_r.value
    base_err = outer_l.err_est + outer_r.err_est

    def sym(t):
        return _eval(f, c + t) + _eval(f, c - t)

    seq = [base]
    acc = base
    quad_err = base_err
    best = base
    prev_best = None
    width = d0
    for _ in range(max_halvings):
        r = integrate(sym, width / 2.0, width, tol)
        acc = acc + r.value
        quad_err += r.err_est
        width /= 2.0
        seq.append(acc)
        best, _ = richardson(seq[-6:], 2.0, [1, 3, 5, 7, 9])
        if prev_best is not None:
            change = abs(best - prev_best)
            if change <= max(tol.abs_tol, tol.rel_tol * abs(best)):
                return QuadResult(best, change + quad_err)
        prev_best = best
    raise NonConvergence(
        "principal-value excision sequence did not stabilise",
        estimate=best,
        err_est=abs(best - prev_best) if prev_best is not None else math.inf,
    )


def integrate_oscillatory(
    f: Callable[[np.ndarray], np.ndarray],
    k: float,
    lo: float = 0.0,
    tol: Tolerance = DEFAULT_TOL,
    *,
    method: str = "half_period",
    omega: float = 0.0,
    cutoff: float | None = None,
    tail_bound: float = 0.0,
    max_panels: int = 4000,
    epsilon0: float = 0.005,
    epsilon_levels: int = 6,
) -> QuadResult:
    """Semi-infinite Fourier-type integral of f(x) exp(i k x) over [lo, inf).

    ``method="half_period"`` integrates panel by panel and accelerates the
    partial sums with Wynn's epsilon algorithm. Panels are half periods of the
    slowest combination frequency: pi/|k| for non-oscillating f, and
    pi/min(||k| - omega|, |k| + omega) when f itself oscillates at angular
    frequency ``omega`` (e.g. omega = a for J0(a x)).

    ``method="converging_factor"`` inserts exp(-eps x^2), evaluates the damped
    integral for a geometric sequence of eps and extrapolates eps -> 0.

    If f is known to vanish (to within ``tail_bound`` in absolute integral)
    beyond ``cutoff``, the panel sum stops there and the bound is added to the
    error estimate.
    """
    if k == 0:
        raise ValueError("k must be non-zero")
    lo = float(lo)
    if method == "half_period":
        return _osc_half_period(f, k, lo, tol, omega, cutoff, tail_bound, max_panels)
    if method == "converging_factor":
        return _osc_converging_factor(
            f, k, lo, tol, omega, epsilon0, epsilon_levels, max_panels
        )
    raise ValueError(f"unknown method {method!r}")


def _panel_width(k, omega):
    """Panel length that makes every oscillation mode rotate per panel.

    Wynn's algorithm removes geometric error modes but stalls on a mode whose
    phase advances by a multiple of 2 pi per panel, so the half period of the
    slowest mode is shortened until all modes keep clear of that.
    """
    freqs = [abs(k)] if omega == 0 else [abs(abs(k) - omega), abs(k) + omega]
    freqs = [w for w in freqs if w > 1e-12 * abs(k)]
    base = np.pi / min(freqs)
    best, best_gap = base, -1.0
    for frac in (1.0, 3 / 4, 2 / 3, 3 / 5, 4 / 7, 1 / 2, 2 / 5, 1 / 3):
        h = base * frac
        phases = np.mod(np.array(freqs) * h, 2 * np.pi)
        gap = float(np.min(np.minimum(phases, 2 * np.pi - phases)))
        if gap > best_gap + 1e-12:
            best, best_gap = h, gap
        if gap >= np.pi / 3:
            return h
    return best


def _panel_integral(f, k, a, b, tol):
    def g(x):
        return _eval(f, x) * np.exp(1j * k * x)
    return integrate(g, a, b, tol)


def _osc_half_period(f, k, lo, tol, omega, cutoff, tail_bound, max_panels):
    h = _panel_width(k, omega)
    sums = []
    acc = 0j
    quad_err = 0.0
    prev_est = None
    stable = 0
    a = lo
    for j in range(max_panels):
        b = a + h
        if cutoff is not None and b >= cutoff:
            r = _panel_integral(f, k, a, cutoff, tol)
            acc += r.value
            quad_err += r.err_est
            return QuadResult(acc, quad_err + tail_bound)
        r = _panel_integral(f, k, a, b, tol)
        acc += r.value
        quad_err += r.err_est
        sums.append(acc)
        a = b
        target = max(tol.abs_tol, tol.rel_tol * abs(acc))
        if abs(r.value) <= 1e-3 * target and j >= 2:
            # integrand has died off; the raw sum is already converged
            stable += 1
            if stable >= 3:
                return QuadResult(acc, quad_err + abs(r.value))
            continue
        stable = 0
        if len(sums) >= 7:
            est, spread = wynn_epsilon(sums[-40:])
            if prev_est is not None:
                change = abs(est - prev_est)
                target = max(tol.abs_tol, tol.rel_tol * abs(est))
                if change <= target and spread <= 10 * target:
                    return QuadResult(est, change + quad_err)
            prev_est = est
    raise NonConvergence(
        "oscillatory tail acceleration stalled",
        estimate=prev_est,
        err_est=math.inf,
    )


def _osc_converging_factor(f, k, lo, tol, omega, epsilon0, levels, max_panels):
    # the damped integral expands in powers of eps / w^2 for the slowest mode w,
    # so epsilon0 is taken relative to that scale
    freqs = [abs(k)] if omega == 0 else [abs(abs(k) - omega), abs(k) + omega]
    slow = min(w for w in freqs if w > 1e-12 * abs(k))
    values = []
    quad_err = 0.0
    for j in range(levels):
        eps = epsilon0 * slow**2 / 2.0**j
        # exp(-eps x^2) < 1e-18 beyond this point
        cutoff = lo + math.sqrt(41.5 / eps) + abs(lo)

        def damped(x, eps=eps):
            return _eval(f, x) * np.exp(-eps * x * x)

        r = _osc_half_period(damped, k, lo, tol, omega, cutoff, 0.0, max_panels)
        values.append(r.value)
        quad_err += r.err_est
    best, err = richardson(values, 2.0, list(range(1, levels)))
    return QuadResult(best, err + quad_err)
