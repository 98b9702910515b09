"""Command-line front end: toa-lab <subcommand> [--config PATH] [flags]."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import __version__
from .config import ExperimentConfig, load_config
from .distributions import (default_tau_grid, mean_arrival, peak_shift, peak_time,
                            toa_distribution)
from .eigenfunctions import Kind, ToaEigenfunction, position_density
from .errors import NonConvergence, ToaLabError
from .kernels import Provenance, Region, barrier_kernel_piece, weyl_kernel
from .ordering import builtin, closed_form_kernel, deform
from .potentials import Free, SquareBarrier, heaviside, kappa_o
from .tunneling import delta_tau_coordinate, delta_tau_eigen, delta_tau_momentum
from .verify import SUITES, run_suite
from .wavepackets import support_classification

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3


def thread_cap() -> int:
    raw = os.environ.get("TOA_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _parallel_map(fn, items):
    items = list(items)
    workers = min(thread_cap(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# artifact writers
# ---------------------------------------------------------------------------

def _clean(obj):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _fmt(v):
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_csv(path: Path, header, rows, cfg: ExperimentConfig):
    meta = json.dumps({"version": __version__, "config": cfg.resolved()}, sort_keys=True, separators=(",", ":"))
    lines = [f"# toa_lab {meta}", ",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", newline="\n")


def write_json(path: Path, payload: dict, cfg: ExperimentConfig):
    doc = {"version": __version__, "config": cfg.resolved(), **payload}
    path.write_text(json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n", newline="\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _barrier_kernel(V: SquareBarrier, rule, pcfg):
    pieces = {r: barrier_kernel_piece(V, r, pcfg) for r in Region}
    if rule.name != "weyl":
        pieces = {r: deform(rule, k) for r, k in pieces.items()}
    a, b = V.a, V.b

    def ev(eta, zeta):
        return (heaviside(-eta - a) * pieces[Region.III](eta, zeta)
                + (heaviside(eta + a) - heaviside(eta + b)) * pieces[Region.II](eta, zeta)
                + heaviside(eta + b) * pieces[Region.I](eta, zeta))

    prov = Provenance.CLOSED_FORM if rule.name == "weyl" else Provenance.DEFORMED
    return ev, prov


def _grid(cfg):
    g = cfg.grids.eta_zeta
    axis = np.linspace(-g.extent, g.extent, g.n)
    E, Z = np.meshgrid(axis, axis, indexing="ij")
    return E.ravel(), Z.ravel()


def cmd_kernel(cfg: ExperimentConfig, out: Path):
    pcfg, V, rule = cfg.physical_config(), cfg.build_potential(), cfg.build_rule()
    eta, zeta = _grid(cfg)
    if isinstance(V, SquareBarrier):
        ev, prov = _barrier_kernel(V, rule, pcfg)
        values = ev(eta, zeta)
    else:
        kern = weyl_kernel(V, pcfg)
        if rule.name != "weyl":
            kern = deform(rule, kern)
        values, prov = kern(eta, zeta), kern.provenance
    rows = [(e, z, v, prov.value) for e, z, v in zip(eta, zeta, values)]
    path = out / "kernel.csv"
    write_csv(path, ("eta", "zeta", "value", "provenance"), rows, cfg)
    return EXIT_OK, f"wrote {path}"


def cmd_deform(cfg: ExperimentConfig, out: Path):
    pcfg, V, rule = cfg.physical_config(), cfg.build_potential(), cfg.build_rule()
    eta, zeta = _grid(cfg)
    if isinstance(V, SquareBarrier):
        # region pieces are fixed points of every even rule, so the Weyl pieces are the reference
        deformed = _barrier_kernel(V, rule, pcfg)[0](eta, zeta)
        oracle = _barrier_kernel(V, builtin("weyl"), pcfg)[0](eta, zeta)
        reference = "undeformed_barrier_pieces"
    else:
        deformed = deform(rule, weyl_kernel(V, pcfg))(eta, zeta)
        oracle = closed_form_kernel(rule, V, eta, zeta, pcfg)
        reference = "closed_form"
    err = np.abs(deformed - oracle)
    scale = np.where(oracle != 0, np.abs(oracle), 1.0)
    rows = [(e, z, d, o, x) for e, z, d, o, x in zip(eta, zeta, deformed, oracle, err)]
    write_csv(out / "deform.csv", ("eta", "zeta", "deformed", "reference", "abs_err"), rows, cfg)
    summary = {"rule": rule.name, "reference": reference, "max_abs_err": float(err.max()),
               "max_rel_err": float((err / scale).max())}
    write_json(out / "deform.json", summary, cfg)
    return EXIT_OK, json.dumps(summary, sort_keys=True)


def _require_barrier(V):
    if not isinstance(V, SquareBarrier):
        raise ValueError("this subcommand needs a square_barrier potential")


def cmd_tunnel_time(cfg: ExperimentConfig, out: Path):
    pcfg, V, pkt = cfg.physical_config(), cfg.build_potential(), cfg.build_packet()
    _require_barrier(V)
    routes = (delta_tau_coordinate, delta_tau_momentum, delta_tau_eigen)
    reports = _parallel_map(lambda fn: fn(pkt, V, pcfg), routes)
    payload = {
        "support": support_classification(pkt, kappa_o(V, pcfg)).value,
        "routes": {r.route.value: r.to_json() for r in reports},
        "L_over_nu0": V.L * pcfg.mu / (pcfg.hbar * pkt.k0) if pkt.k0 else None,
    }
    mom = reports[1]
    payload["tau_trav"] = mom.tau_trav
    payload["tau_trav_err_est"] = mom.err_est
    write_json(out / "tunnel_time.json", payload, cfg)
    return EXIT_OK, json.dumps(_clean(payload["routes"]), sort_keys=True)


def cmd_eigen(cfg: ExperimentConfig, out: Path):
    pcfg, V = cfg.physical_config(), cfg.build_potential()
    barrier = V if isinstance(V, SquareBarrier) else None
    if barrier is None and not isinstance(V, Free):
        raise ValueError("eigen supports free and square_barrier potentials")
    g = cfg.grids.q
    q = np.linspace(g.lo, g.hi, g.n)
    dens = {k: position_density(ToaEigenfunction(k, cfg.tau, pcfg, barrier), q, cfg.epsilon)
            for k in (Kind.NON_NODAL, Kind.NODAL)}
    rows = zip(q, dens[Kind.NON_NODAL], dens[Kind.NODAL])
    path = out / "eigen.csv"
    write_csv(path, ("q", "density_non_nodal", "density_nodal"), rows, cfg)
    return EXIT_OK, f"wrote {path}"


def cmd_distribution(cfg: ExperimentConfig, out: Path):
    pcfg, V, pkt = cfg.physical_config(), cfg.build_potential(), cfg.build_packet()
    _require_barrier(V)
    tg = cfg.grids.tau
    grid = default_tau_grid(pkt, pcfg, tg.n)
    if tg.lo is not None or tg.hi is not None:
        grid = np.linspace(grid[0] if tg.lo is None else tg.lo, grid[-1] if tg.hi is None else tg.hi, tg.n)
    systems = ("Free", "Barrier", "FreeShortened")
    free, bar, short = _parallel_map(lambda s: toa_distribution(pkt, s, grid, pcfg, V), systems)
    rows = zip(grid, free.values, bar.values, short.values, free.err_est, bar.err_est, short.err_est)
    write_csv(out / "distribution.csv",
              ("tau", "pi_free", "pi_barrier", "pi_free_shortened",
               "err_free", "err_barrier", "err_free_shortened"), rows, cfg)
    dt = delta_tau_momentum(pkt, V, pcfg)
    mean_diff = mean_arrival(free) - mean_arrival(bar)
    summary = {
        "peak_free": peak_time(free),
        "peak_barrier": peak_time(bar),
        "peak_free_shortened": peak_time(short),
        "peak_shift": peak_shift(free, bar),
        "peak_resolution": float(grid[1] - grid[0]),
        "mean_diff": mean_diff,
        "delta_tau_crosscheck": dt.delta_tau,
        "delta_tau_err_est": dt.err_est,
        "norm_captured": {"free": free.norm_captured, "barrier": bar.norm_captured,
                          "free_shortened": short.norm_captured},
        "failed_points": {"free": list(free.failed), "barrier": list(bar.failed),
                          "free_shortened": list(short.failed)},
    }
    write_json(out / "distribution.json", summary, cfg)
    return EXIT_OK, json.dumps(_clean({k: summary[k] for k in ("peak_shift", "mean_diff", "delta_tau_crosscheck")}),
                               sort_keys=True)


def cmd_verify(cfg: ExperimentConfig, out: Path, suite: str):
    results = run_suite(suite, cfg.physical_config())
    for r in results:
        print(r.line())
    payload = {"suite": suite, "checks": [{k: v for k, v in r.to_json().items() if k != "seconds"}
                                          for r in results]}
    payload["checks"] = [{**c, "details": {k: v for k, v in c["details"].items() if k != "runtime_s"}}
                         for c in payload["checks"]]
    write_json(out / f"verify_{suite}.json", payload, cfg)
    failed = [r.criterion for r in results if not r.passed]
    if failed:
        return EXIT_ACCEPTANCE, f"failed criteria: {failed}"
    return EXIT_OK, f"all {len(results)} checks passed"


COMMANDS = {
    "kernel": cmd_kernel,
    "deform": cmd_deform,
    "tunnel-time": cmd_tunnel_time,
    "eigen": cmd_eigen,
    "distribution": cmd_distribution,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toa-lab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None, help="JSON experiment config")
        p.add_argument("--out", type=Path, default=Path("toa_lab_out"), help="artifact directory")
        p.add_argument("--tol", type=float, default=None, help="relative quadrature tolerance")
        p.add_argument("--epsilon", type=float, default=None, help="converging factor for densities")
        p.add_argument("--grid", type=int, default=None, help="grid size for the subcommand's sweep")
        if name == "verify":
            p.add_argument("--suite", default="all", choices=sorted(SUITES))
    return parser


_GRID_KEY = {"kernel": "grids.eta_zeta.n", "deform": "grids.eta_zeta.n", "eigen": "grids.q.n",
             "distribution": "grids.tau.n"}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.tol is not None:
        overrides["physical.rel_tol"] = args.tol
    if args.epsilon is not None:
        overrides["epsilon"] = args.epsilon
    if args.grid is not None and args.command in _GRID_KEY:
        overrides[_GRID_KEY[args.command]] = args.grid
    try:
        cfg = load_config(args.config, overrides)
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "verify":
            code, message = cmd_verify(cfg, args.out, args.suite)
        else:
            code, message = COMMANDS[args.command](cfg, args.out)
    except NonConvergence as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, ValueError, KeyError, ToaLabError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(message)
    return code


if __name__ == "__main__":
    sys.exit(main())
