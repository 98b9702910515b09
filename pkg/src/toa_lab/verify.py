"""Acceptance checks, grouped into suites for the `verify` subcommand."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import simpson
from scipy.special import hyp0f1 as scipy_hyp0f1
from scipy.special import i0 as scipy_i0
from scipy.special import j0 as scipy_j0

from .distributions import (default_tau_grid, l1_shift_distance, mean_arrival, peak_shift,
                            toa_distribution)
from .eigenfunctions import (Kind, ToaEigenfunction, apply_barrier_toa_momentum,
                             barrier_eigenfunction, completeness_defect, critical_momentum,
                             position_density)
from .kernels import free_kernel, supra_correction_chain, supra_correction_n1, weyl_kernel
from .numerics import bessel_i0, bessel_j0, hyp0f1, hyp0f1_1, integrate_oscillatory
from .ordering import OrderingRule, builtin, closed_form_kernel, deform
from .potentials import Harmonic, Linear, PhysicalConfig, Polynomial, SquareBarrier, derivative, evaluate
from .tunneling import (GaussianTest, delta_tau_coordinate, delta_tau_eigen, delta_tau_momentum,
                        ordering_invariance_check, teccr_defect)
from .wavepackets import GaussianPacket


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.criterion}: {self.name} ({self.seconds:.1f} s)"

    def to_json(self):
        return {"criterion": self.criterion, "name": self.name, "passed": self.passed,
                "details": self.details, "seconds": round(self.seconds, 3)}


def _timed(criterion, name, fn: Callable[[], tuple]):
    t0 = time.perf_counter()
    passed, details = fn()
    return CheckResult(criterion, name, bool(passed), details, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 1. deformed kernels against closed forms
# ---------------------------------------------------------------------------

def check_ordering_oracles(cfg: PhysicalConfig | None = None, n: int = 20, extent: float = 2.0):
    cfg = cfg or PhysicalConfig()

    def run():
        axis = np.linspace(-extent, extent, n)
        E, Z = np.meshgrid(axis, axis, indexing="ij")
        worst = {}
        t0 = time.perf_counter()
        for V in (Linear(1.0), Harmonic(1.0, mu=cfg.mu)):
            weyl = weyl_kernel(V, cfg)
            for name in ("born_jordan", "simple_symmetric"):
                got = deform(builtin(name), weyl)(E, Z)
                ref = closed_form_kernel(name, V, E, Z, cfg)
                scale = np.where(ref != 0, np.abs(ref), 1.0)
                worst[f"{name}/{type(V).__name__}"] = float(np.max(np.abs(got - ref) / scale))
        elapsed = time.perf_counter() - t0
        ok = max(worst.values()) < 1e-8 and elapsed < 10.0
        return ok, {"max_rel_error": worst, "runtime_s": elapsed}

    return _timed(1, "deformed kernels match closed forms", run)


# ---------------------------------------------------------------------------
# 2. ordering invariance of the traversal-time kernels
# ---------------------------------------------------------------------------

def random_even_rules(count=5, seed=7, n_terms=4):
    rng = np.random.default_rng(seed)
    rules = []
    for i in range(count):
        alpha = [1.0]
        for _ in range(n_terms):
            alpha += [0.0, float(rng.normal())]
        rules.append(OrderingRule(f"random{i}", tuple(alpha)))
    return rules


def check_ordering_invariance(cfg: PhysicalConfig | None = None):
    cfg = cfg or PhysicalConfig()

    def run():
        V = SquareBarrier(1.0, 1.0, 0.5)
        rules = [builtin(n) for n in ("weyl", "born_jordan", "simple_symmetric")] + random_even_rules()
        devs = {r.name: ordering_invariance_check(r, V, cfg)["max_abs_deviation"] for r in rules}
        return all(d == 0.0 for d in devs.values()), {"max_abs_deviation": devs}

    return _timed(2, "ordering invariance of free and region-III kernels", run)


# ---------------------------------------------------------------------------
# 3. supraquantized corrections
# ---------------------------------------------------------------------------

def supra_simpson_oracle(V, T_base, eta, zeta, cfg, n=513):
    """Brute-force nested Simpson evaluation of the leading supra correction."""
    s = np.linspace(0.0, eta, n)
    w = np.linspace(0.0, zeta, n)
    S, W = np.meshgrid(s, w, indexing="ij")
    arg = cfg.mu / (2 * cfg.hbar**2) * (zeta**2 - W**2) * (evaluate(V, eta) - evaluate(V, S))
    inner = simpson(W**3 * scipy_hyp0f1(1, arg) * T_base(S, W), x=w, axis=1)
    return cfg.mu / (24 * cfg.hbar**2) * simpson(derivative(V, s, 3) * inner, x=s)


def check_supra(cfg: PhysicalConfig | None = None):
    cfg = cfg or PhysicalConfig()

    def run():
        V = SquareBarrier(1.0, 1.0, 0.5)
        axis = np.linspace(-3.0, 3.0, 13)
        E, Z = np.meshgrid(axis, axis, indexing="ij")
        barrier_zero = True
        for n in range(1, 6):
            kern = supra_correction_chain(V, n, cfg)
            log_ok = all(step["vanishes"] for step in kern.metadata["derivation_log"])
            barrier_zero &= log_ok and bool(np.all(kern(E, Z) == 0.0))
        quartic = Polynomial((0.0, 0.0, 0.0, 0.0, 1.0))
        weyl = weyl_kernel(quartic, cfg)
        corr = supra_correction_n1(quartic, weyl, cfg)
        rel = {}
        for eta, zeta in ((1.0, 1.0),):
            got = float(corr(eta, zeta))
            ref = float(supra_simpson_oracle(quartic, weyl, eta, zeta, cfg))
            rel[f"{eta},{zeta}"] = abs(got - ref) / abs(ref)
        ok = barrier_zero and max(rel.values()) < 1e-6
        return ok, {"barrier_orders_1_to_5_zero": barrier_zero, "quartic_rel_error": rel}

    return _timed(3, "supra corrections", run)


# ---------------------------------------------------------------------------
# 4. three routes to the traversal-time difference
# ---------------------------------------------------------------------------

# (k0, kappa, sigma) spanning above, below and mixed support
ROUTE_CASES = (
    (15.0, 5.0, 1.2), (10.0, 3.0, 2.0), (8.0, 2.0, 1.0),
    (15.0, 20.0, 1.2), (3.0, 8.0, 2.0), (5.0, 12.0, 1.5),
    (1.4, 1.5, 1.0), (5.0, 5.0, 1.2), (10.0, 9.5, 0.8), (2.0, 2.5, 0.5),
)


def route_case(k0, kappa, sigma, cfg, a=1.0, b=0.5):
    V = SquareBarrier(0.5 * (cfg.hbar * kappa) ** 2 / cfg.mu, a, b)
    pkt = GaussianPacket(-a - 12.0 * sigma, k0, sigma)
    return pkt, V


def check_three_routes(cfg: PhysicalConfig | None = None):
    cfg = cfg or PhysicalConfig()

    def run():
        t0 = time.perf_counter()
        worst = 0.0
        rows = []
        for k0, kap, sig in ROUTE_CASES:
            pkt, V = route_case(k0, kap, sig, cfg)
            reps = [delta_tau_coordinate(pkt, V, cfg), delta_tau_momentum(pkt, V, cfg),
                    delta_tau_eigen(pkt, V, cfg)]
            ok_case = True
            for i in range(3):
                for j in range(i + 1, 3):
                    a, b = reps[i], reps[j]
                    allowed = max(1e-6 * max(abs(a.delta_tau), abs(b.delta_tau)), a.err_est + b.err_est)
                    diff = abs(a.delta_tau - b.delta_tau)
                    ok_case &= diff <= allowed
                    worst = max(worst, diff / max(allowed, 1e-300))
            rows.append({"k0": k0, "kappa": kap, "sigma": sig, "ok": bool(ok_case),
                         "delta_tau": [r.delta_tau for r in reps]})
        elapsed = time.perf_counter() - t0
        ok = all(r["ok"] for r in rows) and elapsed < 60.0
        return ok, {"cases": rows, "worst_diff_over_allowed": worst, "runtime_s": elapsed}

    return _timed(4, "three-route equivalence", run)


# ---------------------------------------------------------------------------
# 5. instantaneous tunneling and the high-energy limit
# ---------------------------------------------------------------------------

def check_instantaneity(cfg: PhysicalConfig | None = None):
    cfg = cfg or PhysicalConfig()

    def run():
        pkt, V = route_case(15.0, 20.0, 1.2, cfg)
        rep = delta_tau_momentum(pkt, V, cfg)
        nu0 = cfg.hbar * pkt.k0 / cfg.mu
        scale = V.L / nu0
        below_ok = pkt.k0 + 5 / (2 * pkt.sigma) < 20.0 and rep.tau_trav < 1e-8 * scale
        kap = math.sqrt(2.0)
        hi_pkt, hi_V = route_case(75.0, kap, 1.2, cfg)
        hi = delta_tau_momentum(hi_pkt, hi_V, cfg)
        r_lim = 75.0 / math.sqrt(75.0**2 - kap**2)
        q_err, r_err = abs(hi.Q - 1.0), abs(hi.R - r_lim)
        ok = below_ok and q_err < 1e-4 and r_err < 1e-4
        return ok, {"tau_trav": rep.tau_trav, "bound": 1e-8 * scale, "Q": hi.Q, "R": hi.R,
                    "R_limit": r_lim, "Q_err": q_err, "R_err": r_err}

    return _timed(5, "instantaneous tunneling and high-energy limits", run)


# ---------------------------------------------------------------------------
# 6. time-energy conjugacy
# ---------------------------------------------------------------------------

TECCR_PAIRS = ((GaussianTest(-0.3, 0.1, 0.0), GaussianTest(0.2, 0.12, 0.0)),
               (GaussianTest(-0.3, 0.1, 3.0), GaussianTest(0.2, 0.12, 3.0)))


def check_teccr(cfg: PhysicalConfig | None = None):
    cfg = cfg or PhysicalConfig()

    def run():
        H = Harmonic(1.0, mu=cfg.mu)
        weyl = weyl_kernel(H, cfg)
        bj = deform(builtin("born_jordan"), weyl)
        free_d, weyl_d, bj_d = [], [], []
        for phi, psi in TECCR_PAIRS:
            free_d.append(abs(teccr_defect(free_kernel(), Polynomial((0.0,)), phi, psi, cfg)))
            weyl_d.append(abs(teccr_defect(weyl, H, phi, psi, cfg)))
            bj_d.append(abs(teccr_defect(bj, H, phi, psi, cfg)))
        bound = 1e-5 * cfg.hbar
        ratio_ok = all(b >= 10 * w for b, w in zip(bj_d, weyl_d))
        ok = max(free_d) < bound and max(weyl_d) < bound and ratio_ok
        return ok, {"free": free_d, "weyl_harmonic": weyl_d, "bj_harmonic": bj_d}

    return _timed(6, "time-energy conjugacy defects", run)


# ---------------------------------------------------------------------------
# 7. eigenfunction structure
# ---------------------------------------------------------------------------

COMPLETENESS_WINDOWS = (0.01, 0.03, 0.1, 0.3, 1.0, 200.0)


def _normalized_gaussian(center, width=1.0):
    norm = (2 * math.pi * width**2) ** -0.25
    return lambda p: norm * np.exp(-((np.asarray(p, float) - center) ** 2) / (4 * width**2)) + 0j


def check_eigen(cfg: PhysicalConfig | None = None):
    cfg = cfg or PhysicalConfig()

    def run():
        V = SquareBarrier(1.0, 0.75, 0.25)
        pc = critical_momentum(V, cfg)
        gap = 0.1
        p = np.concatenate([np.linspace(gap, pc - gap, 60), np.linspace(pc + gap, 20.0, 240)])
        residual = 0.0
        for tau in (-1.0, 0.0, 2.0):
            phi = lambda x, tau=tau: barrier_eigenfunction(Kind.NON_NODAL, tau, x, V, cfg)
            op = apply_barrier_toa_momentum(phi, V, cfg)
            residual = max(residual, float(np.max(np.abs(op(p) - tau * phi(p)))))
        g = _normalized_gaussian(15.0)
        defects = [abs(completeness_defect(V, g, g, cfg, T=T)) for T in COMPLETENESS_WINDOWS]
        monotone = all(b <= a + 1e-12 for a, b in zip(defects, defects[1:]))
        nodal = float(position_density(ToaEigenfunction(Kind.NODAL, 0.0, cfg, V), 0.0))
        ok = residual < 1e-8 and monotone and defects[-1] < 1e-3 and nodal < 1e-10
        return ok, {"eigen_residual": residual, "completeness_T": list(COMPLETENESS_WINDOWS),
                    "completeness_defect": defects, "nodal_density_at_0": nodal}

    return _timed(7, "eigenfunction structure", run)


# ---------------------------------------------------------------------------
# 8. distributions for the reference packet
# ---------------------------------------------------------------------------

def check_distribution(cfg: PhysicalConfig | None = None, below_V0: float = 200.0, above_V0: float = 20.0):
    cfg = cfg or PhysicalConfig()

    def run():
        t0 = time.perf_counter()
        pkt = GaussianPacket(-9.0, 15.0, 1.2)
        grid = default_tau_grid(pkt, cfg)
        below = SquareBarrier(below_V0, 1.0, 0.5)
        above = SquareBarrier(above_V0, 1.0, 0.5)
        free = toa_distribution(pkt, "Free", grid, cfg)
        bar = toa_distribution(pkt, "Barrier", grid, cfg, below)
        abv = toa_distribution(pkt, "Barrier", grid, cfg, above)
        target = -below.L * cfg.mu / (cfg.hbar * pkt.k0)
        shift = peak_shift(free, bar)
        shift_above = peak_shift(free, abv)
        mean_diff = mean_arrival(free) - mean_arrival(bar)
        dt = delta_tau_momentum(pkt, below, cfg).delta_tau
        elapsed = time.perf_counter() - t0
        ok = (abs(shift / target - 1) < 0.10 and shift_above > 0
              and abs(mean_diff / dt - 1) < 0.02 and elapsed < 300)
        return ok, {"peak_shift": shift, "target": target, "peak_shift_above": shift_above,
                    "mean_diff": mean_diff, "delta_tau_momentum": dt,
                    "l1_shift_distance": l1_shift_distance(free, bar, shift), "runtime_s": elapsed}

    return _timed(8, "TOA distribution peak shift and moments", run)


# ---------------------------------------------------------------------------
# 9. numerics foundation
# ---------------------------------------------------------------------------

def check_numerics(cfg: PhysicalConfig | None = None):
    cfg = cfg or PhysicalConfig()

    def run():
        x = np.linspace(-30.0, 30.0, 601)
        z = np.linspace(-9.0, 9.0, 181)
        ident = {
            "0F1(1;-x^2/4)=J0": np.abs(hyp0f1_1(-x * x / 4) - bessel_j0(x)),
            "series 0F1(b;z), |z|<=9": np.max([np.abs(hyp0f1(b, z) / scipy_hyp0f1(b, z) - 1) for b in (1, 2, 3)]),
            "0F1_1(x^2/4)=I0": np.abs(hyp0f1_1(x * x / 4) / bessel_i0(x) - 1),
            "J0 vs reference": np.abs(bessel_j0(x) - scipy_j0(x)),
            "I0 vs reference": np.abs(bessel_i0(x) / scipy_i0(x) - 1),
        }
        ident = {k: float(np.max(v)) for k, v in ident.items()}
        integrals = {}
        for a, b in ((1.0, 2.0), (2.0, 1.0), (1.0, 1.01)):
            res = integrate_oscillatory(lambda t, a=a: bessel_j0(a * t), b, 0.0, cfg.tol, omega=a)
            exact = 1.0 / math.sqrt(b * b - a * a) if b > a else 0.0
            integrals[f"{a},{b}"] = abs(float(np.imag(res.value)) - exact)
        ok = max(ident.values()) < 1e-10 and max(integrals.values()) < 1e-8
        return ok, {"identities": ident, "oscillatory_abs_error": integrals}

    return _timed(9, "special functions and oscillatory integrals", run)


CHECKS = {
    1: check_ordering_oracles,
    2: check_ordering_invariance,
    3: check_supra,
    4: check_three_routes,
    5: check_instantaneity,
    6: check_teccr,
    7: check_eigen,
    8: check_distribution,
    9: check_numerics,
}

SUITES = {
    "numerics": (9,),
    "ordering": (1, 2),
    "supra": (3,),
    "tunneling": (4, 5),
    "conjugacy": (6,),
    "eigen": (7,),
    "distribution": (8,),
    "all": tuple(range(1, 10)),
}


def run_suite(name: str = "all", cfg: PhysicalConfig | None = None) -> list[CheckResult]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}")
    return [CHECKS[c](cfg) for c in SUITES[name]]
