"""The graph flow on a Cartesian lattice over [-L, L]^2 (n = 2).

Same implicit time discretization as the radial solver, without the symmetry
assumption: the Newton systems are sparse nine-point operators solved by
ILU-preconditioned GMRES.  Boundary edges impose the cone's radial slope
projected onto the outward normal, u_n = alpha(t) (x . n)/|x|; corner nodes
take the condition of their x1-edge.

Diagnostics (sandwich, H bounds, v) are evaluated on the inscribed disk
|x| <= L only, since the corners sit beyond the confining cones' control.
"""

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import LinearOperator, gmres, spilu, splu

from . import diagnostics as diag
from .errors import (CurvatureFloor, DomainError, MeanConvexityViolation,
                     NewtonDiverged, SandwichViolation)
from .exact import cone_slope
from .geometry import GraphState2D, compute_fields_2d, lattice_derivatives

_FD_EPS = 1e-6


class Sim2D:
    """State of one lattice simulation: height field, confining cones, history."""

    def __init__(self, state, cone, config):
        self.state = state
        self.cone = cone
        self.config = config
        self.c0 = None
        self.C0 = None
        self.history = []
        self.samples = []
        self.stop_reason = None
        self._prev = None        # (u, dt) of the last completed step
        self._ilu = None         # cached preconditioner (refreshed per solve)

    @property
    def t(self):
        return self.state.t


def radial_datum_2d(L, m, alpha0, kappa):
    """Hyperboloid sampled on the lattice."""
    x = np.linspace(-L, L, 2 * m + 1)
    rho2 = x[:, None] ** 2 + x[None, :] ** 2
    return np.sqrt(alpha0 ** 2 * rho2 + kappa ** 2)


def elliptical_datum_2d(L, m, alpha0, kappa, ratio=1.2):
    """Convex non-radial datum: hyperboloid with an elliptically modulated offset.

    The naive squeeze of the quadratic form (x1^2 + ratio x2^2)/ratio dips
    below the lower cone along the x1 axis, so the elliptical weight
    w = (x1^2 + ratio x2^2 + 1)/(ratio |x|^2 + 1) in (0, 1] is applied to the
    offset term instead: alpha0 |x| < u <= sqrt(alpha0^2 |x|^2 + kappa^2),
    which keeps the datum strictly sandwiched for every ratio >= 1.
    """
    x = np.linspace(-L, L, 2 * m + 1)
    x1 = x[:, None]
    x2 = x[None, :]
    rho2 = x1 ** 2 + x2 ** 2
    w = (x1 ** 2 + ratio * x2 ** 2 + 1.0) / (ratio * rho2 + 1.0)
    return np.sqrt(alpha0 ** 2 * rho2 + kappa ** 2 * w)


def disk_mask(state):
    """Nodes of the inscribed disk |x| <= L where diagnostics apply."""
    x = state.x
    return x[:, None] ** 2 + x[None, :] ** 2 <= state.L ** 2


def init_2d(u0, cone, L, m, config, enforce_sandwich=True):
    """Validate a lattice datum and wrap it in a simulation.

    Sandwich and mean convexity are checked on the inscribed disk; the
    measured bounds of H * u there are stored as (c0, C0).
    """
    state = GraphState2D(L=L, m=m, u=np.asarray(u0, dtype=float).copy(), t=0.0)
    mask = disk_mask(state)
    x = state.x
    rho = np.sqrt(x[:, None] ** 2 + x[None, :] ** 2)
    if enforce_sandwich:
        lower = cone.alpha0 * rho
        worst = np.maximum(lower - state.u, state.u - lower - cone.kappa)
        worst = np.where(mask, worst, -np.inf)
        i = np.unravel_index(int(np.argmax(worst)), worst.shape)
        if worst[i] > 1e-12 * max(1.0, np.abs(state.u).max()):
            raise SandwichViolation(i, float(worst[i]))
    f = compute_fields_2d(state)
    H = np.where(mask, f.H, np.inf)
    i = np.unravel_index(int(np.argmin(H)), H.shape)
    if H[i] <= 0:
        raise MeanConvexityViolation(i, float(H[i]))
    sim = Sim2D(state, cone, config)
    Hu = (f.H * state.u)[mask]
    sim.c0 = float(Hu.min())
    sim.C0 = float(Hu.max())
    return sim


# ---------------------------------------------------------------------------
# residual


def _edge_slope_targets(state, cone, t):
    """Normal-slope data on the four edges: alpha(t) * (x . n)/|x|."""
    x = state.x
    L = state.L
    a = cone_slope(cone, t)
    hyp = np.sqrt(L ** 2 + x ** 2)
    return a * L / hyp


def _residual_2d(sim, u_new, hist, dt, t_new):
    """Nodal residual of one implicit step; returns (R, ok)."""
    state = sim.state
    if not np.all(np.isfinite(u_new)):
        return None, False
    trial = GraphState2D(L=state.L, m=state.m, u=u_new, t=t_new)
    ux, uy, uxx, uyy, uxy = lattice_derivatives(trial)
    W2 = 1.0 + ux ** 2 + uy ** 2
    denom = (1.0 + uy ** 2) * uxx - 2.0 * ux * uy * uxy + (1.0 + ux ** 2) * uyy
    inner = denom[1:-1, 1:-1]
    if not np.all(np.isfinite(inner)) or np.any(inner <= 0.0):
        return None, False
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        R = u_new - hist + dt * W2 ** 2 / denom
    g = _edge_slope_targets(state, sim.cone, t_new)
    # one-sided second-order normal slopes on the edges; corners use the
    # x1-edge condition
    h = state.h
    R[0, :] = (-3 * u_new[0, :] + 4 * u_new[1, :] - u_new[2, :]) / (2 * h) + g
    R[-1, :] = (3 * u_new[-1, :] - 4 * u_new[-2, :] + u_new[-3, :]) / (2 * h) - g
    R[1:-1, 0] = ((-3 * u_new[1:-1, 0] + 4 * u_new[1:-1, 1]
                   - u_new[1:-1, 2]) / (2 * h) + g[1:-1])
    R[1:-1, -1] = ((3 * u_new[1:-1, -1] - 4 * u_new[1:-1, -2]
                    + u_new[1:-1, -3]) / (2 * h) - g[1:-1])
    if not np.all(np.isfinite(R)):
        return None, False
    return R, True


# ---------------------------------------------------------------------------
# Jacobian: nine-color finite differences into a sparse matrix


def _stencil_offsets(N):
    """Column offsets of the nine-point + one-sided-edge sparsity pattern."""
    offs = [(di, dj) for di in (-2, -1, 0, 1, 2) for dj in (-2, -1, 0, 1, 2)
            if abs(di) + abs(dj) <= 2]
    return offs


def _jacobian_2d(sim, u_new, hist, dt, t_new, R0):
    """Sparse Jacobian by coloring: columns with equal (i mod 5, j mod 5) are
    perturbed together; the stencil reaches two nodes along each axis (the
    one-sided edge rows), so stride 5 keeps the colors independent."""
    shape = u_new.shape
    N = u_new.size
    eps = _FD_EPS * max(1.0, float(np.abs(u_new).max()))
    rows, cols, vals = [], [], []
    I, J = np.meshgrid(np.arange(shape[0]), np.arange(shape[1]), indexing="ij")
    offs = _stencil_offsets(N)
    for ci in range(5):
        for cj in range(5):
            mask = (I % 5 == ci) & (J % 5 == cj)
            if not mask.any():
                continue
            pert = u_new + eps * mask
            Rp, ok = _residual_2d(sim, pert, hist, dt, t_new)
            if not ok:
                pert = u_new - eps * mask
                Rp, ok = _residual_2d(sim, pert, hist, dt, t_new)
                if not ok:
                    return None
                col = (R0 - Rp) / eps
            else:
                col = (Rp - R0) / eps
            # distribute the lumped column onto the touched matrix entries
            ii, jj = np.nonzero(mask)
            for di, dj in offs:
                i1 = ii + di
                j1 = jj + dj
                ok_ij = ((i1 >= 0) & (i1 < shape[0])
                         & (j1 >= 0) & (j1 < shape[1]))
                rows.append(i1[ok_ij] * shape[1] + j1[ok_ij])
                cols.append(ii[ok_ij] * shape[1] + jj[ok_ij])
                vals.append(col[i1[ok_ij], j1[ok_ij]])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    keep = vals != 0.0
    return csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(N, N))


def _solve_sparse(J, rhs):
    """ILU-preconditioned GMRES with a direct-factorization fallback."""
    try:
        ilu = spilu(J.tocsc(), drop_tol=1e-6, fill_factor=20)
        M = LinearOperator(J.shape, ilu.solve)
        x, info = gmres(J, rhs, M=M, rtol=1e-12, atol=0.0, maxiter=200)
        if info == 0:
            return x
    except RuntimeError:
        pass
    return splu(J.tocsc()).solve(rhs)


# ---------------------------------------------------------------------------
# stepping


def step_2d(sim, dt=None):
    """One implicit step of the lattice flow (BDF2 after the first step)."""
    cfg = sim.config
    if dt is None:
        dt = cfg.dt
    u_old = sim.state.u
    t_new = sim.t + dt

    f = compute_fields_2d(sim.state)
    mask = disk_mask(sim.state)
    H = np.where(mask, f.H, np.inf)
    i = np.unravel_index(int(np.argmin(H)), H.shape)
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
    R, ok = _residual_2d(sim, u, hist, dt_eff, t_new)
    if not ok:
        raise NewtonDiverged(np.inf, 0, t=sim.t)
    norm = np.abs(R).max()
    for it in range(cfg.newton_max_iter):
        if norm < cfg.newton_tol:
            break
        J = _jacobian_2d(sim, u, hist, dt_eff, t_new, R)
        if J is None:
            raise NewtonDiverged(float(norm), it, t=sim.t)
        delta = _solve_sparse(J, R.ravel()).reshape(u.shape)
        lam = 1.0
        for _ in range(cfg.max_damping):
            trial = u - lam * delta
            Rt, ok = _residual_2d(sim, trial, hist, dt_eff, t_new)
            if ok and np.abs(Rt).max() < norm:
                u, R, norm = trial, Rt, np.abs(Rt).max()
                break
            lam *= 0.5
        else:
            if norm <= 100.0 * cfg.newton_tol:
                break
            raise NewtonDiverged(float(norm), it, t=sim.t)
    else:
        if norm >= cfg.newton_tol:
            raise NewtonDiverged(float(norm), cfg.newton_max_iter, t=sim.t)

    sim._prev = (u_old, dt)
    sim.state.u = u
    sim.state.t = t_new
    return sim


def _record_2d(sim):
    state = sim.state
    f = compute_fields_2d(state)
    mask = disk_mask(state)
    x = state.x
    rho = np.sqrt(x[:, None] ** 2 + x[None, :] ** 2)
    t_c = min(sim.t, sim.cone.lifetime)
    a = cone_slope(sim.cone, t_c)
    lower = a * rho
    viol = np.maximum(lower - state.u, state.u - lower - sim.cone.kappa)
    row = {
        "t": sim.t,
        "sup_Hu": float((f.H * state.u)[mask].max()),
        "inf_v": float(f.v[mask].min()),
        "min_H": float(f.H[mask].min()),
        "sandwich_viol": float(max(viol[mask].max(), 0.0)),
        "gamma_t": sim.cone.gamma(t_c),
    }
    sim.history.append(row)
    sim.samples.append((sim.t, state.copy()))
    return row


def run_2d(sim, t_end):
    """Step to t_end, sampling diagnostics; stops early at the curvature floor."""
    cfg = sim.config
    T = sim.cone.lifetime
    sample_dt = cfg.effective_sample_interval()
    if not sim.history:
        _record_2d(sim)
    next_sample = sim.t + sample_dt
    while sim.t < t_end - 1e-14 * max(abs(t_end), 1.0):
        dt = min(cfg.dt, t_end - sim.t, cfg.lifetime_cap * (T - sim.t))
        if dt < 1e-10 * max(T, 1.0):
            break
        try:
            step_2d(sim, dt)
        except CurvatureFloor:
            sim.stop_reason = "curvature_floor"
            _record_2d(sim)
            return sim
        if sim.t >= next_sample - 1e-12:
            _record_2d(sim)
            next_sample += sample_dt
    sim.stop_reason = "reached"
    _record_2d(sim)
    return sim


def ring_oscillation(state, radii, n_angles=256):
    """Azimuthal spread max(u) - min(u) on circles |x| = r.

    Asymmetric sandwiched data relax toward radial symmetry; this spread is
    the quantity observed to be nonincreasing along the flow.  The height is
    bilinearly interpolated onto each circle so the radial trend of u does
    not pollute the angular variation.
    """
    from scipy.interpolate import RegularGridInterpolator
    interp = RegularGridInterpolator((state.x, state.x), state.u,
                                     method="cubic")
    theta = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
    out = []
    for rp in radii:
        pts = np.column_stack([rp * np.cos(theta), rp * np.sin(theta)])
        vals = interp(pts)
        out.append(float(vals.max() - vals.min()))
    return out
