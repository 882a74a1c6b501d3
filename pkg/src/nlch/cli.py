"""
Command-line front end.

Subcommands::

    build-operator   assemble (or load) the convolution operator and cache it
    validate         e_eps sweeps over (N, eps, alpha) for the 2D Newtonian kernel
    solve            integrate the Cahn--Hilliard system and write artifacts
    regularized      logarithmic vs regularized potential discrepancies
    diagnostics      recompute equilibrium diagnostics from a solve directory

Exit status: 0 ok, 2 configuration error, 3 numerical failure, 4 resource guard.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import cache, initial, io
from .config import ConfigError, load
from .domain_maps import DomainMap, pullback_operator
from .errors import (DomainError, GeometryError, InitializationError, IntegrationFailure,
                     InvalidArgument, NLCHError, ResourceError)
from .kernels import (KERNEL_EVALS, composite, default_sigma, mollifier, newtonian2d,
                      newtonian3d_regularized)
from .multishape import assemble_operator, assemble_operator_3d, validate
from .operators import ConvOperator, OperatorMeta
from .potentials import Potential, regularized
from .solver import (SolverConfig, integrate, regularized_shift_check, series_diagnostics)
from .spectral import cheb_grid, square_grid, tensor_grid_3d

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_RESOURCE = 0, 2, 3, 4
SNAPSHOT_TIMES = (0.0, 0.05, 0.3, 1.0)


def _log(msg):
    print(msg, file=sys.stderr, flush=True)


# ---------------------------------------------------------------- operators

def _kernel(cfg):
    k = cfg.kernel
    if k.kind == "newtonian2d":
        return newtonian2d(k.eta), ()
    if k.kind == "mollifier":
        return mollifier(k.a, k.eta), (k.a,)
    if k.kind == "mixture":
        return composite([(1.0, newtonian2d()), (k.weight, mollifier(k.a))], k.eta), (k.a, k.weight)
    raise ConfigError(f"kernel {k.kind} is not a 2D kernel")


def _dmap(cfg):
    d = cfg.domain
    return None if d.kind == "square" else DomainMap(d.kind, d.params)


def expected_meta(cfg, grid):
    """Metadata the operator for ``cfg`` will carry (used to validate caches)."""
    k, cv = cfg.kernel, cfg.conv
    if k.kind == "newtonian3d-regularized":
        sigma = k.sigma if k.sigma is not None else default_sigma(grid)
        return OperatorMeta(N=cfg.grid.N, eps=float(sigma), alpha=1.0, kernel_id="newt3d-reg",
                            partition_mode="direct3d", eta=k.eta, corrected=False)
    kern, kp = _kernel(cfg)
    dmap = _dmap(cfg)
    return OperatorMeta(N=cfg.grid.N, eps=cv.eps, alpha=cv.alpha, kernel_id=kern.id,
                        partition_mode=cv.mode, eta=kern.eta, corrected=cv.correct,
                        domain=dmap.meta() if dmap else (), kernel_params=kp)


def make_grid(cfg):
    if cfg.kernel.kind == "newtonian3d-regularized":
        return tensor_grid_3d(cheb_grid(cfg.grid.N))
    return square_grid(cfg.grid.N)


def build(cfg, grid, threads=None):
    k, cv = cfg.kernel, cfg.conv
    if k.kind == "newtonian3d-regularized":
        sigma = k.sigma if k.sigma is not None else default_sigma(grid)
        return assemble_operator_3d(grid, newtonian3d_regularized(sigma), eta=k.eta)
    kern, kp = _kernel(cfg)
    dmap = _dmap(cfg)
    if dmap is None:
        op = assemble_operator(grid, kern, cv.eps, cv.alpha, cv.mode, cv.correct, threads)
    else:
        if kern.kind == "composite":
            raise ConfigError("mapped domains support single kernels only")
        op = pullback_operator(dmap, grid, kern, cv.eps, cv.alpha, cv.mode, cv.correct, threads)
    return replace(op, meta=replace(op.meta, kernel_params=kp))


def obtain(cfg, grid, threads=None, cache_path=None):
    """Operator for ``cfg``: from ``cache_path`` when it matches, else assembled (and cached).

    Returns ``(op, loaded)``.
    """
    want = expected_meta(cfg, grid)
    if cache_path and os.path.exists(cache_path):
        try:
            op = cache.read(cache_path, grid)
        except cache.CacheFormatError as exc:
            _log(f"ignoring cache {cache_path}: {exc}")
        else:
            if cache.matches(op, want):
                return op, True
            _log(f"cache {cache_path} was built for a different configuration; rebuilding")
    op = build(cfg, grid, threads)
    if cache_path:
        os.makedirs(os.path.dirname(os.path.abspath(cache_path)), exist_ok=True)
        cache.write(op, cache_path)
    return op, False


# ---------------------------------------------------------------- commands

def cmd_build_operator(cfg, out, threads, cache_path):
    grid = make_grid(cfg)
    path = cache_path or os.path.join(out, "operator.bin")
    t = time.perf_counter()
    op, loaded = obtain(cfg, grid, threads, path)
    wall = time.perf_counter() - t
    report = {"cache": path, "M": op.M, "loaded": loaded, "wall_time": wall,
              "bytes": os.path.getsize(path)}
    print(f"operator M = {op.M} {'loaded' if loaded else 'assembled'} in {wall:.3f} s -> {path}")
    if op.meta.kernel_id == "newt2d" and not op.meta.domain:
        unit = ConvOperator(op.grid, op.matrix / op.meta.eta, replace(op.meta, eta=1.0))
        v = validate(unit)
        report.update(max_e=v["max"], mean_e=v["mean"], max_abs_G=v["max_abs_G"])
        print(f"max e_eps = {v['max']!r}  mean e_eps = {v['mean']!r}")
    io.write_json(os.path.join(out, "build.json"), report)
    return report


def _validate_one(N, eps, alpha, mode, threads):
    grid = square_grid(N)
    op = assemble_operator(grid, newtonian2d(), eps, alpha, mode, True, threads)
    v = validate(op)
    return N, eps, alpha, grid.points, v


def cmd_validate(cfg, out, threads, cache_path):
    vc = cfg.validate
    Ns = vc.N or (cfg.grid.N,)
    jobs = [(N, e, a) for N in Ns for e in vc.eps for a in vc.alpha
            if abs(a * N - round(a * N)) < 1e-12]
    skipped = len(Ns) * len(vc.eps) * len(vc.alpha) - len(jobs)
    if skipped:
        _log(f"skipping {skipped} (N, alpha) pairs with non-integer alpha N")
    workers = threads or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        res = list(pool.map(lambda j: _validate_one(*j, cfg.conv.mode, 1), jobs))
    summary, swarm = [], []
    for N, eps, alpha, pts, v in res:
        summary.append((N, eps, alpha, v["max"], v["mean"], v["max_abs_G"]))
        for p, e in zip(pts, v["e"]):
            swarm.append((N, eps, alpha, p[0], p[1], e))
    io.write_csv(os.path.join(out, "validate.csv"),
                 ["N", "eps", "alpha", "max_e", "mean_e", "max_abs_G"], summary)
    io.write_csv(os.path.join(out, "swarm.csv"), ["N", "eps", "alpha", "x1", "x2", "e"], swarm)
    for row in summary:
        print("N={} eps={!r} alpha={!r} max_e={!r} mean_e={!r} max|G|={!r}".format(*row))
    return summary


def _potential(cfg):
    p = cfg.potential
    return Potential(p.kind, p.theta, p.omega)


def _initial(ic, grid, a=0.1):
    pts = grid.points
    if ic == "wave":
        return initial.wave(pts)
    if ic == "compact":
        return initial.compact(pts, a)
    if isinstance(ic, tuple) and ic[0] == "constant":
        return initial.constant(pts, ic[1])
    if isinstance(ic, tuple) and ic[0] == "file":
        vals = np.loadtxt(ic[1], delimiter=",", ndmin=1).ravel()
        if vals.shape != (grid.M,):
            raise ConfigError(f"initial file holds {vals.size} values, grid has {grid.M} nodes")
        return vals
    raise ConfigError(f"unknown initial condition {ic!r}")


def _initial_spec(cfg):
    ini = cfg.initial
    if ini.kind == "constant":
        return ("constant", ini.c)
    if ini.kind == "file":
        return ("file", ini.path)
    return ini.kind


def _solver_cfg(cfg, T):
    t = cfg.time
    return SolverConfig(t_end=T, abs_tol=t.abs_tol, rel_tol=t.rel_tol, mobility=t.mobility,
                        formulation=t.formulation, initial_dt=min(t.initial_dt, T),
                        max_steps=t.max_steps)


def _square_2d(cfg):
    if cfg.kernel.kind == "newtonian3d-regularized":
        raise ConfigError("the solver is two-dimensional; use build-operator for 3D operators")
    if cfg.domain.kind != "square":
        raise ConfigError("the solver runs on the unit square; mapped domains are operator-only")


def _write_states(path, grid, states, extra=None):
    rows = []
    for s in states:
        for i, (p, r, m) in enumerate(zip(grid.points, s.rho, s.mu)):
            rows.append((s.t, i, p[0], p[1], r, m))
    io.write_csv(path, ["t", "node", "x1", "x2", "rho", "mu"], rows)


def cmd_solve(cfg, out, threads, cache_path):
    _square_2d(cfg)
    grid = make_grid(cfg)
    KERNEL_EVALS.reset()
    op, loaded = obtain(cfg, grid, threads, cache_path)
    evals = KERNEL_EVALS.value
    T = cfg.time.T
    outs = sorted(set(cfg.time.outputs or [v for v in SNAPSHOT_TIMES if v <= T]) | {T})
    rho0 = _initial(_initial_spec(cfg), grid, cfg.initial.a)
    t = time.perf_counter()
    try:
        traj, diag = integrate(rho0, op, _potential(cfg), grid, _solver_cfg(cfg, T), t_out=outs)
    except IntegrationFailure as exc:
        if exc.last_state is not None:
            _write_states(os.path.join(out, "failure_state.csv"), grid, [exc.last_state])
        raise
    wall = time.perf_counter() - t
    steps = traj.steps
    rates = [math.nan] + [float(np.max(np.abs(b.rho - a.rho)) / (b.t - a.t))
                          for a, b in zip(steps[:-1], steps[1:])]
    io.write_csv(os.path.join(out, "trajectory.csv"),
                 ["t", "mass", "energy", "sup_norm", "l2_to_final", "rate"],
                 [(s.t, s.mass, s.energy, s.sup_norm, l2, r)
                  for s, l2, r in zip(steps, diag.l2_to_final, rates)])
    _write_states(os.path.join(out, "snapshots.csv"), grid, traj.outputs)
    masses = np.array([s.mass for s in steps])
    energies = np.array([s.energy for s in steps])
    report = diag.as_dict()
    report.update(
        N=grid.nx, T=T, steps=len(steps) - 1, rejected=traj.rejected,
        newton_iterations=traj.newton_iters, factorizations=traj.factorizations,
        wall_time=wall, mass_drift=float(np.max(np.abs(masses - masses[0]))),
        max_energy_increase=float(np.max(np.diff(energies))) if len(energies) > 1 else 0.0,
        operator_loaded=loaded, kernel_evaluations=evals,
    )
    if cfg.initial.kind == "constant":
        drift = float(np.max(np.abs(steps[-1].rho - steps[0].rho)))
        report["note"] = (f"constant initial datum moved by {drift!r} in sup norm; the operator "
                          "applied to a constant is not constant near the boundary")
    io.write_json(os.path.join(out, "diagnostics.json"), report)
    print(f"solved to T = {T!r} in {len(steps) - 1} steps ({wall:.2f} s); delta = "
          f"{diag.delta!r}, mu_inf = {diag.mu_inf!r}, mass drift = {report['mass_drift']!r}")
    return report


def _reg_job(args):
    eta, ic, horizon, T, op, grid, cfg, r = args
    rho0 = _initial(ic, grid, cfg.initial.a)
    pot_log = Potential("logarithmic", cfg.potential.theta)
    pot_reg = regularized(r.omega, cfg.potential.theta)
    res = regularized_shift_check(rho0, op.scaled(eta / op.meta.eta), pot_log, pot_reg, r.sigma, T, grid, _solver_cfg(cfg, T))
    label = ic if isinstance(ic, str) else repr(ic[1])
    return (eta, label, horizon, T, res["discrepancy"], res["min_margin"])


def cmd_regularized(cfg, out, threads, cache_path):
    _square_2d(cfg)
    r = cfg.regularized
    if r.sigma is None:
        raise ConfigError("[regularized] sigma is required and must be positive")
    grid = make_grid(cfg)
    if cfg.kernel.eta == 0.0:
        raise ConfigError("[kernel] eta must be nonzero for regularized runs")
    op, _ = obtain(cfg, grid, threads, cache_path)
    etas = r.eta or (cfg.kernel.eta,)
    if r.initial == "":
        ics = [_initial_spec(cfg)]
    elif r.initial in ("wave", "compact"):
        ics = [r.initial]
    else:
        ics = [("constant", float(r.initial))]
    horizons = []
    if r.short_T is not None:
        horizons.append(("short", r.short_T))
    horizons.append(("long", r.long_T if r.long_T is not None else 10.0 - 3.0 * r.sigma))
    jobs = [(eta, s, h, T, op, grid, cfg, r) for eta in etas for s in ics for h, T in horizons]
    with ThreadPoolExecutor(max_workers=threads or os.cpu_count() or 1) as pool:
        rows = list(pool.map(_reg_job, jobs))
    io.write_csv(os.path.join(out, "regularized.csv"),
                 ["eta", "initial", "horizon", "T", "discrepancy", "min_margin"], rows)
    io.write_json(os.path.join(out, "regularized.json"),
                  {"omega": r.omega, "sigma": r.sigma,
                   "max_discrepancy": max(row[4] for row in rows),
                   "runs": [dict(zip(["eta", "initial", "horizon", "T", "discrepancy",
                                      "min_margin"], row)) for row in rows]})
    for row in rows:
        print("eta={!r} initial={} {} T={!r} discrepancy={!r}".format(*row[:5]))
    return rows


def cmd_diagnostics(cfg, out, threads, cache_path):
    """Recompute diagnostics from ``trajectory.csv`` and ``snapshots.csv`` in ``out``."""
    _square_2d(cfg)
    grid = make_grid(cfg)
    hdr, rows = io.read_csv(os.path.join(out, "trajectory.csv"))
    tr = np.array(rows, dtype=float)
    col = {h: i for i, h in enumerate(hdr)}
    _, snap = io.read_csv(os.path.join(out, "snapshots.csv"))
    snap = np.array(snap, dtype=float)
    last = snap[snap[:, 0] == snap[:, 0].max()]
    mu = last[np.argsort(last[:, 1]), 5]
    if mu.shape != (grid.M,):
        raise ConfigError("snapshots do not match the configured grid")
    d = series_diagnostics(tr[:, col["t"]], tr[:, col["sup_norm"]], tr[:, col["l2_to_final"]],
                           tr[:, col["energy"]], mu, grid.weights, tr[-1, col["rate"]])
    report = d.as_dict()
    io.write_json(os.path.join(out, "diagnostics_recomputed.json"), report)
    print(f"delta = {d.delta!r}  mu_inf = {d.mu_inf!r}  flatness = {d.mu_flatness!r}  "
          f"decay exponent = {d.decay_exponent!r} (R^2 = {d.decay_r2!r})")
    return report


COMMANDS = {
    "build-operator": cmd_build_operator,
    "validate": cmd_validate,
    "solve": cmd_solve,
    "regularized": cmd_regularized,
    "diagnostics": cmd_diagnostics,
}


def parser():
    p = argparse.ArgumentParser(prog="nlch", description="Nonlocal Cahn--Hilliard toolkit")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="INI run configuration")
    p.add_argument("--out", help="artifact directory (default: [outputs] directory)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    p.add_argument("--cache", help="operator cache file (default: [conv] cache)")
    p.add_argument("--seed", type=int, default=None, help="seed for randomized test utilities")
    return p


def main(argv=None):
    try:
        args = parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if args.seed is not None:
            np.random.seed(args.seed)
        cfg = load(args.config)
        out = args.out or cfg.outputs.directory
        os.makedirs(out, exist_ok=True)
        COMMANDS[args.command](cfg, out, args.threads, args.cache or cfg.conv.cache)
    except (ConfigError, InvalidArgument, OSError) as exc:
        _log(f"configuration error: {exc}")
        return EXIT_CONFIG
    except ResourceError as exc:
        _log(f"resource guard: {exc}")
        return EXIT_RESOURCE
    except (IntegrationFailure, InitializationError, DomainError, GeometryError,
            NLCHError, FloatingPointError, np.linalg.LinAlgError) as exc:
        _log(f"numerical failure: {exc}")
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
