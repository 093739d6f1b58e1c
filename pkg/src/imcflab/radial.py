"""Implicit time integration of the rotationally symmetric graph flow.

One backward-Euler step solves the nodal residual of

    u_t = -(1 + u_r^2)^2 / (u_rr + (n-1)(1 + u_r^2) u_r / r)

by damped Newton with tridiagonal-band Jacobian solves.  The effective
diffusivity grows like r^2 (the ultra-fast diffusion character of the flow),
so explicit stepping is CFL-prohibitive and everything here is implicit.

The far-field boundary imposes either the exact cone slope (Neumann, the
default: the asymptotic slope of a sandwiched solution is exactly the cone's)
or a Dirichlet value shifted along the cone evolution.

A simulation is single-threaded and deterministic; distinct simulations share
no mutable state and may run fully in parallel.
"""

import numpy as np
from dataclasses import dataclass, field
from scipy.linalg import solve_banded

from . import diagnostics as diag
from .errors import (CurvatureFloor, DomainError, MeanConvexityViolation,
                     NewtonDiverged, NotFlattened, SandwichViolation,
                     VertexSingularity)
from .exact import ConeFamily, cone_slope
from .geometry import (RadialGrid, RadialProfile, make_radial_grid,
                       radial_curvature_parts)



@dataclass
class SolverConfig:
    """Numerical knobs shared by the radial and Cartesian solvers."""

    dt: float = 1e-3
    newton_tol: float = 1e-10
    newton_max_iter: int = 30
    h_min: float = 1e-9
    bc_kind: str = "neumann"      # "neumann" (cone slope) or "dirichlet" (shift)
    flat_eps: float = 1e-2
    max_damping: int = 20
    sample_interval: float = 0.0  # 0 -> 10 * dt
    lifetime_cap: float = 0.02    # dt <= lifetime_cap * (T - t) near extinction
    time_order: int = 2           # 2 -> BDF2, 1 -> backward Euler (monotone)

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"dt = {self.dt} must be > 0")
        if not self.newton_tol > 0:
            raise DomainError("newton_tol must be > 0")
        if not self.h_min > 0:
            raise DomainError("h_min must be > 0")
        if self.bc_kind not in ("neumann", "dirichlet"):
            raise DomainError(f"unknown bc_kind {self.bc_kind!r}")
        if self.time_order not in (1, 2):
            raise DomainError(f"time_order = {self.time_order} must be 1 or 2")

    def effective_sample_interval(self):
        return self.sample_interval if self.sample_interval > 0 else 10 * self.dt


class RadialSim:
    """State of one radial simulation: profile, confining cones, history."""

    def __init__(self, profile, cone, config, bc_value=None):
        self.profile = profile
        self.cone = cone
        self.config = config
        self.bc_value = bc_value          # optional t -> Dirichlet value
        self.u0_boundary = float(profile.u[-1])
        self.c0 = None                    # measured bounds of H * u at t = 0
        self.C0 = None
        self.history = []                 # diagnostics rows (dicts)
        self.samples = []                 # (t, RadialProfile) at sample times
        self.flat_crossings = {}          # threshold -> interpolated time
        self.stop_reason = None
        self._last_flat = None
        self._prev = None                 # (u, dt) of the last completed step

    @property
    def t(self):
        return self.profile.t

    @property
    def grid(self):
        return self.profile.grid


# ---------------------------------------------------------------------------
# initial data


def hyperboloid_datum(grid, alpha0, kappa):
    """Smooth datum ``sqrt(alpha0^2 r^2 + kappa^2)``.

    Touches the upper cone at the axis and hugs the lower cone at infinity.
    """
    return np.sqrt(alpha0 ** 2 * grid.r ** 2 + kappa ** 2)


def cone_smooth_datum(grid, alpha0, kappa, scale=None):
    """Cone with the vertex mollified at the given length scale.

    Equals ``alpha0 r + kappa`` up to O(scale^2/r) away from the axis and is
    smooth and sandwiched everywhere.  ``scale`` defaults to ``kappa/2``.
    """
    if scale is None:
        scale = 0.5 * kappa
    if not 0 < scale <= kappa:
        raise DomainError(f"smoothing scale {scale} must be in (0, kappa]")
    return np.sqrt(alpha0 ** 2 * grid.r ** 2 + scale ** 2) + (kappa - scale)


def random_sandwiched_pair(grid, cone, rng):
    """Seeded ordered pair of convex sandwiched data for comparison tests.

    Both are convex mixtures of hyperboloid-type profiles; the second
    dominates the first node-wise by construction.
    """
    k = int(rng.integers(1, 4))
    w = rng.dirichlet(np.ones(k))
    kappa = cone.kappa
    a = kappa * rng.uniform(0.2, 0.4, size=k)
    b = kappa * rng.uniform(0.0, 0.15, size=k)
    da = kappa * rng.uniform(0.0, 0.2, size=k)
    db = kappa * rng.uniform(0.0, 0.15, size=k)
    r = grid.r

    def mix(aa, bb):
        comps = [np.sqrt(cone.alpha0 ** 2 * r ** 2 + ai ** 2) + bi
                 for ai, bi in zip(aa, bb)]
        return sum(wi * ci for wi, ci in zip(w, comps))

    return mix(a, b), mix(a + da, b + db)


# ---------------------------------------------------------------------------
# initialization


def init_radial(u0, cone, grid, config, enforce_sandwich=True,
                vertex_ratio=5.0, bc_value=None):
    """Validate an initial profile and wrap it in a simulation.

    Checks the cone sandwich node-wise, strict mean convexity, and that the
    discrete curvature does not concentrate at the axis (which is how a
    nonsmooth vertex shows up on a fixed grid).  Stores the measured bounds
    ``c0 <= H*u <= C0``.
    """
    u0 = np.asarray(u0, dtype=float)
    profile = RadialProfile(grid=grid, u=u0.copy(), t=0.0)
    if enforce_sandwich:
        lower = cone.alpha0 * grid.r
        upper = lower + cone.kappa
        below = lower - u0
        above = u0 - upper
        worst = np.maximum(below, above)
        i = int(np.argmax(worst))
        if worst[i] > 1e-12 * max(1.0, np.abs(u0).max()):
            raise SandwichViolation(i, float(worst[i]))
    u_r, u_rr, W, denom = radial_curvature_parts(grid, u0)
    H = denom / W ** 3
    i = int(np.argmin(H))
    if H[i] <= 0:
        raise MeanConvexityViolation(i, float(H[i]))
    if u_rr[0] > vertex_ratio * max(u_rr[1], 1e-300):
        raise VertexSingularity(
            f"discrete u_rr at the axis ({u_rr[0]:.3e}) exceeds "
            f"{vertex_ratio} x its neighbor ({u_rr[1]:.3e}); "
            "the vertex is not resolved by this grid")
    sim = RadialSim(profile, cone, config, bc_value=bc_value)
    Hu = H * u0
    sim.c0 = float(Hu.min())
    sim.C0 = float(Hu.max())
    return sim


# ---------------------------------------------------------------------------
# residual and Jacobian


def _bc_residual(sim, u_new, t_new):
    grid = sim.grid
    r = grid.r
    a = r[-2] - r[-3]
    b = r[-1] - r[-2]
    if sim.config.bc_kind == "neumann":
        ur_R = (b / (a * (a + b)) * u_new[-3]
                - (a + b) / (a * b) * u_new[-2]
                + (a + 2 * b) / (b * (a + b)) * u_new[-1])
        return ur_R - cone_slope(sim.cone, t_new)
    if sim.bc_value is not None:
        g = sim.bc_value(t_new)
    else:
        g = sim.u0_boundary + (cone_slope(sim.cone, t_new)
                               - sim.cone.alpha0) * grid.R
    return u_new[-1] - g


def _residual(sim, u_new, u_old, dt, t_new):
    """Backward-Euler residual; returns (R, ok).

    ok is False when the trial state has nonpositive curvature somewhere,
    which the damped Newton treats as an inadmissible step.
    """
    grid = sim.grid
    u_r, u_rr, W, denom = radial_curvature_parts(grid, u_new)
    if not np.all(np.isfinite(denom)) or np.any(denom[:-1] <= 0.0):
        return None, False
    W2 = W * W
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        R = u_new - u_old + dt * W2 ** 2 / denom
    R[-1] = _bc_residual(sim, u_new, t_new)
    if not np.all(np.isfinite(R)):
        return None, False
    return R, True


def _jacobian_bands(sim, u_new, dt):
    """Exact banded Jacobian of the step residual, (l, u) = (2, 1).

    The residual is tridiagonal except for the depth-2 one-sided stencil of
    the Neumann boundary row.  Analytic differentiation matters here: near a
    boundary layer the speed is so nonlinear that finite-difference Jacobians
    lose the descent property of the Newton direction.
    """
    grid = sim.grid
    r = grid.r
    n = grid.n
    u_r, u_rr, W, denom = radial_curvature_parts(grid, u_new)
    N = u_new.size
    ab = np.zeros((4, N))

    h1 = r[1:-1] - r[:-2]
    h2 = r[2:] - r[1:-1]
    sw = (-h2 / (h1 * (h1 + h2)),
          (h2 - h1) / (h1 * h2),
          h1 / (h2 * (h1 + h2)))
    cw = (2.0 / (h1 * (h1 + h2)),
          -2.0 / (h1 * h2),
          2.0 / (h2 * (h1 + h2)))

    s = u_r[1:-1]
    W2 = 1.0 + s * s
    den = denom[1:-1]
    # speed G = W^4/denom: partials in the slope and in the denominator
    dG_ds = 4.0 * W2 * s / den
    dG_dden = -(W2 * W2) / (den * den)
    dden_ds = (n - 1) * (1.0 + 3.0 * s * s) / r[1:-1]
    idx = np.arange(1, N - 1)
    for k, (swk, cwk) in enumerate(zip(sw, cw)):
        j = idx + (k - 1)
        dR = dt * (dG_ds * swk + dG_dden * (cwk + dden_ds * swk))
        ab[1 + idx - j, j] += dR
    ab[1, idx] += 1.0

    # axis row: G = 1/(n u_rr(0)), u_rr(0) = 2(u1 - u0)/r1^2
    c0 = 2.0 / r[1] ** 2
    dG0 = -dt / (n * u_rr[0] ** 2)
    ab[1, 0] += 1.0 + dG0 * (-c0)
    ab[0, 1] += dG0 * c0

    # boundary row
    a = r[-2] - r[-3]
    b = r[-1] - r[-2]
    if sim.config.bc_kind == "neumann":
        w = (b / (a * (a + b)), -(a + b) / (a * b), (a + 2 * b) / (b * (a + b)))
        ab[3, N - 3] = w[0]
        ab[2, N - 2] = w[1]
        ab[1, N - 1] = w[2]
    else:
        ab[1, N - 1] = 1.0
    return ab


# ---------------------------------------------------------------------------
# stepping


def step(sim, dt=None):
    """Advance one implicit step; returns the simulation at t + dt.

    Variable-step BDF2 once a previous state is available, backward Euler on
    the first step.  Both reduce to the same Newton solve: the two-step
    formula is backward Euler with an extrapolated history state and a
    shortened effective step.  The second-order accuracy matters because the
    far field moves with speed of order r and a first-order-in-time height
    drift there would swamp the cone confinement.

    Raises :class:`CurvatureFloor` when the current state sits at the
    curvature floor (the flow speed would blow up) and
    :class:`NewtonDiverged` when the damped iteration stalls.
    """
    cfg = sim.config
    if dt is None:
        dt = cfg.dt
    u_old = sim.profile.u
    t_new = sim.t + dt

    _, _, W, denom = radial_curvature_parts(sim.grid, u_old)
    H = denom / W ** 3
    i = int(np.argmin(H[:-1]))
    if H[i] <= cfg.h_min:
        raise CurvatureFloor(i, float(H[i]), t=sim.t)

    if cfg.time_order == 2 and sim._prev is not None:
        u_prev, h1 = sim._prev
        rho = dt / h1
        hist = ((1.0 + rho) ** 2 * u_old - rho ** 2 * u_prev) / (1.0 + 2.0 * rho)
        dt_eff = dt * (1.0 + rho) / (1.0 + 2.0 * rho)
    else:
        hist = u_old
        dt_eff = dt

    u = u_old.copy()
    R, ok = _residual(sim, u, hist, dt_eff, t_new)
    if not ok:
        raise NewtonDiverged(np.inf, 0, t=sim.t)
    norm = np.abs(R).max()
    for it in range(cfg.newton_max_iter):
        if norm < cfg.newton_tol:
            break
        ab = _jacobian_bands(sim, u, dt_eff)
        delta = solve_banded((2, 1), ab, R)
        lam = 1.0
        for _ in range(cfg.max_damping):
            trial = u - lam * delta
            Rt, ok = _residual(sim, trial, hist, dt_eff, t_new)
            if ok and np.abs(Rt).max() < norm:
                u, R, norm = trial, Rt, np.abs(Rt).max()
                break
            lam *= 0.5
        else:
            # line search exhausted: accept a stall at the rounding floor
            if norm <= 100.0 * cfg.newton_tol:
                break
            raise NewtonDiverged(float(norm), it, t=sim.t)
    else:
        if norm >= cfg.newton_tol:
            raise NewtonDiverged(float(norm), cfg.newton_max_iter, t=sim.t)

    sim._prev = (u_old, dt)
    sim.profile.u = u
    sim.profile.t = t_new
    return sim


def _uses_cone_bc(sim):
    return sim.config.bc_kind == "neumann" or sim.bc_value is None


def _record(sim, probe_fraction=0.6, xbar=(0.0, -1.0)):
    row = diag.trajectory_row(sim.profile, sim.cone,
                              probe_fraction=probe_fraction, xbar=xbar)
    sim.history.append(row)
    sim.samples.append((sim.t, sim.profile.copy()))
    return row


def _update_flat_crossings(sim, t_prev, f_prev, t_new, f_new):
    cfg = sim.config
    for label, thr in (("full", cfg.flat_eps), ("half", 0.5 * cfg.flat_eps)):
        if label in sim.flat_crossings:
            continue
        if f_prev is not None and f_prev >= thr > f_new:
            frac = (f_prev - thr) / max(f_prev - f_new, 1e-300)
            sim.flat_crossings[label] = t_prev + frac * (t_new - t_prev)
        elif f_new < thr:
            sim.flat_crossings[label] = t_new


def run_until(sim, t_end, probe_fraction=0.6, xbar=(0.0, -1.0)):
    """Step repeatedly to ``t_end``, sampling diagnostics along the way.

    Near the cone lifetime the step is capped by half the remaining time so
    the boundary data stays inside its domain.  Stops early with reason
    ``"flattened"`` once the interior slope has crossed both the flattening
    threshold and half of it (the pair feeds the extinction extrapolation),
    or ``"curvature_floor"``.  Returns ``(sim, DiagnosticsReport)``.
    """
    cfg = sim.config
    T = sim.cone.lifetime
    sample_dt = cfg.effective_sample_interval()
    if not sim.history:
        row = _record(sim, probe_fraction, xbar)
        _update_flat_crossings(sim, None, None, sim.t, row["flat_sup"])
        sim._last_flat = (sim.t, row["flat_sup"])
    elif sim._last_flat is None:
        sim._last_flat = (sim.t, diag.flat_sup(sim.profile))
    next_sample = sim.t + sample_dt
    dt_floor = 1e-10 * max(T, 1.0)
    while sim.t < t_end - 1e-14 * max(abs(t_end), 1.0):
        dt = min(cfg.dt, t_end - sim.t)
        if _uses_cone_bc(sim):
            dt = min(dt, cfg.lifetime_cap * (T - sim.t))
            if dt < dt_floor:
                sim.stop_reason = ("flattened" if "half" in sim.flat_crossings
                                   else "curvature_floor")
                _record(sim, probe_fraction, xbar)
                return sim, _report(sim)
        try:
            step(sim, dt)
        except CurvatureFloor:
            sim.stop_reason = "curvature_floor"
            _record(sim, probe_fraction, xbar)
            return sim, _report(sim)
        flat = diag.flat_sup(sim.profile)
        t_prev, f_prev = sim._last_flat
        _update_flat_crossings(sim, t_prev, f_prev, sim.t, flat)
        sim._last_flat = (sim.t, flat)
        if "half" in sim.flat_crossings:
            sim.stop_reason = "flattened"
            _record(sim, probe_fraction, xbar)
            return sim, _report(sim)
        if sim.t >= next_sample - 1e-12:
            _record(sim, probe_fraction, xbar)
            next_sample += sample_dt
    sim.stop_reason = "reached"
    _record(sim, probe_fraction, xbar)
    return sim, _report(sim)


def _report(sim):
    return diag.DiagnosticsReport(rows=list(sim.history),
                                  stop_reason=sim.stop_reason,
                                  flat_crossings=dict(sim.flat_crossings))


def estimate_extinction(sim):
    """Extinction time from the two flattening crossings.

    Richardson extrapolation assuming the crossing time depends linearly on
    the threshold: ``T_est = 2 t(eps/2) - t(eps)``.
    """
    if sim.stop_reason != "flattened" or "half" not in sim.flat_crossings \
            or "full" not in sim.flat_crossings:
        raise NotFlattened(f"run stopped with reason {sim.stop_reason!r}")
    t1 = sim.flat_crossings["full"]
    t2 = sim.flat_crossings["half"]
    return 2.0 * t2 - t1


# ---------------------------------------------------------------------------
# epsilon-regularized families


def epsilon_regularization_study(u0, cone, grid, config, eps_list, t_end=None):
    """Evolve the family ``u0 + eps (r^2 + 1)`` and verify its ordering.

    The regularized data are strictly convex; the comparison structure of the
    scheme must keep the family totally ordered node-wise, monotone in eps.
    Boundary data are Dirichlet, fixed per eps as the initial boundary value
    shifted along the cone evolution.  Returns a dict with the trajectories
    and the worst ordering violation (a scheme-monotonicity defect when it
    exceeds 1e-8).
    """
    if list(eps_list) != sorted(eps_list, reverse=True) or min(eps_list) < 0:
        raise DomainError("eps_list must be strictly decreasing and >= 0")
    if t_end is None:
        t_end = 0.5 * cone.lifetime
    u0 = np.asarray(u0, dtype=float)
    sims = []
    for eps in eps_list:
        ue = u0 + eps * (grid.r ** 2 + 1.0)
        gR = float(ue[-1])
        bc = (lambda t, gR=gR: gR + (cone_slope(cone, t) - cone.alpha0) * grid.R)
        cfg = SolverConfig(dt=config.dt, newton_tol=config.newton_tol,
                           newton_max_iter=config.newton_max_iter,
                           h_min=config.h_min, bc_kind="dirichlet",
                           flat_eps=config.flat_eps,
                           sample_interval=config.sample_interval)
        sim = init_radial(ue, cone, grid, cfg,
                          enforce_sandwich=(eps == 0.0), bc_value=bc)
        run_until(sim, t_end)
        sims.append(sim)
    worst = 0.0
    for hi, lo in zip(sims, sims[1:]):   # eps decreasing: hi has larger eps
        m = min(len(hi.samples), len(lo.samples))
        for (ta, pa), (tb, pb) in zip(hi.samples[:m], lo.samples[:m]):
            if abs(ta - tb) > 1e-12:
                continue
            worst = max(worst, float((pb.u - pa.u).max()))
    return {"eps_list": list(eps_list), "sims": sims,
            "max_ordering_violation": worst, "ordered": worst <= 1e-8}
