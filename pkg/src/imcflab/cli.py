"""Command line front end.

Subcommands: ``cone`` (exact cone tables), ``radial`` and ``grid2d``
(flow runs dumped as long-format CSV), ``selfsim`` (profile shooting),
``verify`` (law checks on a trajectory CSV), ``sweep`` (parallel parameter
scans).  Exit codes: 0 success, 1 check failure, 2 usage error, 3 numerical
failure.  All floating output uses 17 significant digits, ``.`` decimal and
``\\n`` line endings, so equal runs produce byte-identical files.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import diagnostics as diag
from .cartesian import init_2d, radial_datum_2d, run_2d
from .config import RunConfig, parse_config, save_snapshot
from .errors import ConfigError, FlowError, NotFlattened
from .exact import ConeFamily, cone_gamma_beta, cone_slope
from .geometry import (RadialGrid, RadialProfile, compute_fields_2d,
                       compute_fields_radial, make_radial_grid)
from .radial import (SolverConfig, cone_smooth_datum, estimate_extinction,
                     hyperboloid_datum, init_radial, run_until)
from .selfsimilar import flux_ratio, shoot_profile


def _fmt(x):
    return "%.17g" % float(x)


def _emit(path, header, rows):
    """Write a CSV table (17 significant digits) to a file or stdout."""
    text = ",".join(header) + "\n"
    text += "".join(",".join(_fmt(c) if not isinstance(c, str) else c
                             for c in row) + "\n" for row in rows)
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _worker_count():
    raw = os.environ.get("IMCF_THREADS", "")
    try:
        k = int(raw)
    except ValueError:
        k = 0
    return k if k > 0 else (os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_cone(args):
    cone = ConeFamily(args.n, args.alpha0, args.kappa)
    T = cone.lifetime
    rows = []
    for t in np.linspace(0.0, T, args.samples):
        a = cone_slope(cone, t)
        g, b = cone_gamma_beta(cone, t)
        rows.append((t, a, b, g, T))
    _emit(args.out, ["t", "alpha", "beta", "gamma", "T"], rows)
    return 0


def _radial_datum(args, grid):
    if args.datum == "hyperboloid":
        return hyperboloid_datum(grid, args.alpha0, args.kappa)
    if args.datum == "cone-smooth":
        return cone_smooth_datum(grid, args.alpha0, args.kappa)
    u0 = np.loadtxt(args.datum_file)
    if u0.shape != grid.r.shape:
        raise ConfigError(f"datum file holds {u0.size} values, "
                          f"grid has {grid.r.size} nodes")
    return u0


def _cmd_radial(args):
    cone = ConeFamily(args.n, args.alpha0, args.kappa)
    grid = make_radial_grid(args.R, args.nodes, args.n)
    cfg = SolverConfig(dt=args.dt, bc_kind=args.bc)
    sim = init_radial(_radial_datum(args, grid), cone, grid, cfg)
    t_end = args.t_end if args.t_end > 0 else 2.0 * cone.lifetime
    run_until(sim, t_end)
    rows = []
    for t, p in sim.samples:
        f = compute_fields_radial(p)
        for i in range(p.u.size):
            rows.append((t, grid.r[i], p.u[i], f.H[i], f.v[i], f.omega_nu[i]))
    _emit(args.out, ["t", "r", "u", "H", "v", "omega_nu"], rows)
    if args.snapshot:
        save_snapshot(sim, args.snapshot)
    return 0


def _cmd_grid2d(args):
    cone = ConeFamily(2, args.alpha0, args.kappa)
    u0 = radial_datum_2d(args.L, args.m, args.alpha0, args.kappa)
    cfg = SolverConfig(dt=args.dt, bc_kind="neumann")
    sim = init_2d(u0, cone, args.L, args.m, cfg)
    t_end = args.t_end if args.t_end > 0 else 0.5 * cone.lifetime
    run_2d(sim, t_end)
    rows = []
    for t, state in sim.samples:
        f = compute_fields_2d(state)
        x = state.x
        for i in range(x.size):
            for j in range(x.size):
                rows.append((t, x[i], x[j], state.u[i, j],
                             f.H[i, j], f.v[i, j]))
    _emit(args.out, ["t", "x1", "x2", "u", "H", "v"], rows)
    return 0


def _cmd_selfsim(args):
    profile = shoot_profile(args.lam, args.kappa, args.n, r_max=args.rmax)
    rows = [(r, u, ur, r * ur / u)
            for r, u, ur in zip(profile.r, profile.u, profile.ur)]
    _emit(args.out, ["r", "u", "ur", "flux_ratio"], rows)
    return 0


def _load_trajectory(path, n):
    """Rebuild (t, RadialProfile) samples from a long-format radial CSV."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    for col in ("t", "r", "u"):
        if col not in (data.dtype.names or ()):
            raise ConfigError(f"trajectory CSV lacks column {col!r}")
    samples = []
    grid = None
    for t in np.unique(data["t"]):
        block = data[data["t"] == t]
        order = np.argsort(block["r"])
        r = block["r"][order]
        if grid is None:
            grid = RadialGrid(r=r, n=n)
        samples.append((float(t), RadialProfile(grid=grid, u=block["u"][order],
                                                t=float(t))))
    return samples


def _cmd_verify(args):
    samples = _load_trajectory(args.trajectory, args.n)
    cone = ConeFamily(args.n, args.alpha0, args.kappa)
    results = [
        diag.check_sandwich(samples, cone, args.sandwich_tol),
        diag.check_global_H_bound(samples),
        diag.check_starshaped(samples, (0.0, -1.0)),
        diag.check_asymptotic_v(samples, cone),
        diag.check_descent(samples, 1e-8),
    ]
    try:
        results.append(diag.check_lower_bound_v(samples, cone,
                                                0.1 * cone.lifetime))
    except FlowError as exc:
        sys.stderr.write(f"VLOWER skipped: {exc}\n")
    failed = False
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        detail = " ".join(f"{k}={_fmt(v)}" if isinstance(v, float)
                          else f"{k}={v}" for k, v in res.details.items())
        sys.stdout.write(f"{res.law} {status} {detail}\n")
        failed = failed or not res.passed
    return 1 if failed else 0


def _sweep_one(cfg):
    """One extinction run; returns the five summary fields."""
    cone = ConeFamily(cfg["problem.n"], cfg["problem.alpha0"],
                      cfg["problem.kappa"])
    grid = make_radial_grid(cfg["grid.R"], cfg["grid.nodes"],
                            cfg["problem.n"], cfg["grid.stretch"])
    if cfg["problem.datum"] == "cone-smooth":
        u0 = cone_smooth_datum(grid, cone.alpha0, cone.kappa)
    else:
        u0 = hyperboloid_datum(grid, cone.alpha0, cone.kappa)
    sim = init_radial(u0, cone, grid, cfg.solver_config())
    T = cone.lifetime
    t_end = cfg["run.t_end"] if cfg["run.t_end"] > 0 else 2.0 * T
    run_until(sim, t_end)
    T_est = estimate_extinction(sim)
    h, _ = diag.check_plane_convergence(sim.profile, cone.kappa,
                                        sim.config.flat_eps, sim.stop_reason)
    viol = max(row["sandwich_viol"] for row in sim.history)
    return (T_est, T, abs(T_est - T) / T, h, viol)


def _cmd_sweep(args):
    if args.config:
        with open(args.config) as fh:
            base = parse_config(fh.read())
    else:
        base = RunConfig()
    values = [v for v in args.values.split(",") if v.strip()]
    configs = []
    for raw in values:
        overlay = dict(base.values)
        text = f"{args.param} = {raw.strip()}"
        parsed = parse_config(text)
        overlay[args.param] = parsed[args.param]
        configs.append(RunConfig(values=overlay))

    slots = [None] * len(configs)

    def run_slot(i):
        try:
            slots[i] = _sweep_one(configs[i])
        except (FlowError, ConfigError):
            slots[i] = (np.nan, np.nan, np.nan, np.nan, np.nan)

    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        list(pool.map(run_slot, range(len(configs))))
    rows = [(configs[i][args.param],) + slots[i] for i in range(len(configs))]
    _emit(args.out, ["param", "T_est", "T_closed", "rel_err",
                     "h_measured", "max_sandwich_viol"], rows)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_problem_flags(p, with_n=True):
    if with_n:
        p.add_argument("--n", type=int, default=2)
    p.add_argument("--alpha0", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=0.1)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="imcf",
        description="Numerical laboratory for inverse mean curvature flow "
                    "of entire graphs.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cone", help="exact cone-pair evolution table")
    _add_problem_flags(p)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--out", default="")
    p.set_defaults(func=_cmd_cone)

    p = sub.add_parser("radial", help="rotationally symmetric flow run")
    _add_problem_flags(p)
    p.add_argument("--R", type=float, default=100.0)
    p.add_argument("--nodes", type=int, default=2000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", type=float, default=0.0,
                   help="0 runs to twice the cone lifetime")
    p.add_argument("--bc", choices=("neumann", "dirichlet"), default="neumann")
    p.add_argument("--datum", choices=("hyperboloid", "cone-smooth", "file"),
                   default="hyperboloid")
    p.add_argument("--datum-file", default="")
    p.add_argument("--out", default="")
    p.add_argument("--snapshot", default="")
    p.set_defaults(func=_cmd_radial)

    p = sub.add_parser("grid2d", help="Cartesian lattice flow run (n = 2)")
    _add_problem_flags(p, with_n=False)
    p.add_argument("--L", type=float, default=4.0)
    p.add_argument("--m", type=int, default=24)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", type=float, default=0.0,
                   help="0 runs to half the cone lifetime")
    p.add_argument("--out", default="")
    p.set_defaults(func=_cmd_grid2d)

    p = sub.add_parser("selfsim", help="self-similar profile shooting")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--kappa", type=float, default=-1.0,
                   help="vertex depth, negative (profile opens below 0)")
    p.add_argument("--rmax", type=float, default=None)
    p.add_argument("--out", default="")
    p.set_defaults(func=_cmd_selfsim)

    p = sub.add_parser("verify", help="law checks on a radial trajectory CSV")
    p.add_argument("trajectory")
    _add_problem_flags(p)
    p.add_argument("--sandwich-tol", type=float, default=2e-3)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("sweep", help="parallel parameter scan")
    p.add_argument("--config", default="", help="template config file")
    p.add_argument("--param", required=True, help="config key to vary")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", default="")
    p.set_defaults(func=_cmd_sweep)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code in (0, 2) else 2
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (FlowError, NotFlattened) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
