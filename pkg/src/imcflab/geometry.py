"""Discrete differential geometry of height-function graphs.

Shared by the radial and Cartesian solvers and by the diagnostics engine:
gradients and Hessians by second-order finite differences, the graph mean
curvature, and the geometric scalars tracked along the flow.

Orientation: the unit normal is ``nu = (Du, -1)/W`` with ``W = sqrt(1+|Du|^2)``,
so convex graphs opening upward have ``H >= 0`` and the vertical projection
``<omega, nu> = -1/W`` is negative.

All computations are pure; the returned field buffers are plain arrays that
can be moved freely between threads.
"""

import numpy as np
from dataclasses import dataclass, field

from .errors import CurvatureFloor, DomainError


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing radial nodes ``0 = r_0 < r_1 < ... < r_M = R``."""

    r: np.ndarray
    n: int

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        object.__setattr__(self, "r", r)
        if r.ndim != 1 or r.size < 4:
            raise DomainError("radial grid needs at least 4 nodes")
        if r[0] != 0.0:
            raise DomainError(f"r[0] = {r[0]} must be exactly 0")
        dr = np.diff(r)
        if np.any(dr <= 0):
            raise DomainError("radial nodes must be strictly increasing")
        ratio = dr.max() / dr.min()
        if ratio > 10.0:
            raise DomainError(f"adjacent spacing ratio {ratio:.2f} exceeds 10")
        if self.n < 2:
            raise DomainError(f"n = {self.n} must be >= 2")

    @property
    def R(self):
        return float(self.r[-1])

    @property
    def nodes(self):
        return self.r.size


def make_radial_grid(R, M, n, stretch=1.0):
    """Build a radial grid with ``M+1`` nodes on ``[0, R]``.

    ``stretch`` > 1 grows spacings geometrically toward ``R`` (ratio per cell),
    which affords large domains cheaply; kept at <= 1.05 by the solvers.
    """
    if stretch == 1.0:
        r = np.linspace(0.0, R, M + 1)
    else:
        w = stretch ** np.arange(M)
        r = np.concatenate(([0.0], np.cumsum(w)))
        r *= R / r[-1]
    return RadialGrid(r=r, n=n)


@dataclass
class RadialProfile:
    """Height samples ``u`` on a radial grid at time ``t``."""

    grid: RadialGrid
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != self.grid.r.shape:
            raise DomainError("u must have one value per grid node")
        if not np.all(np.isfinite(self.u)):
            raise DomainError("u contains non-finite values")

    def copy(self):
        return RadialProfile(grid=self.grid, u=self.u.copy(), t=self.t)


@dataclass
class GraphState2D:
    """Height samples on the ``(2m+1) x (2m+1)`` lattice of ``[-L, L]^2``.

    The hypersurface dimension is fixed to n = 2.
    """

    L: float
    m: int
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        N = 2 * self.m + 1
        if self.u.shape != (N, N):
            raise DomainError(f"u must be {N} x {N}")
        if not np.all(np.isfinite(self.u)):
            raise DomainError("u contains non-finite values")
        if self.m < 4:
            raise DomainError("lattice needs m >= 4")

    @property
    def h(self):
        return self.L / self.m

    @property
    def x(self):
        """Lattice coordinates along one axis."""
        return np.linspace(-self.L, self.L, 2 * self.m + 1)

    def copy(self):
        return GraphState2D(L=self.L, m=self.m, u=self.u.copy(), t=self.t)


@dataclass
class GeometryFields:
    """Per-node derived quantities of a graph state.

    ``du`` holds the gradient components and ``hess`` the distinct Hessian
    entries (``(u_rr,)`` radially, ``(u_xx, u_yy, u_xy)`` on the lattice).
    ``omega_nu`` is the vertical normal projection, ``F_nu``/``Fhat_nu`` the
    support-type scalars and ``v = Fhat_nu * H`` the quantity whose far-field
    limit is the cone value gamma(t).
    """

    W: np.ndarray
    du: tuple
    hess: tuple
    H: np.ndarray
    omega_nu: np.ndarray
    F_nu: np.ndarray
    Fhat_nu: np.ndarray
    v: np.ndarray


def radial_derivatives(grid, u):
    """Second-order first and second derivatives on a nonuniform radial grid.

    Interior nodes use three-point Lagrange weights.  At r = 0 the profile is
    reflected evenly (u_r(0) = 0, u_rr(0) = 2(u_1-u_0)/r_1^2); the outer
    boundary uses one-sided three-point stencils.
    """
    r = grid.r
    u = np.asarray(u, dtype=float)
    h1 = r[1:-1] - r[:-2]
    h2 = r[2:] - r[1:-1]
    u_r = np.empty_like(u)
    u_rr = np.empty_like(u)
    u_r[1:-1] = (-h2 / (h1 * (h1 + h2)) * u[:-2]
                 + (h2 - h1) / (h1 * h2) * u[1:-1]
                 + h1 / (h2 * (h1 + h2)) * u[2:])
    u_rr[1:-1] = 2.0 * (u[:-2] / (h1 * (h1 + h2))
                        - u[1:-1] / (h1 * h2)
                        + u[2:] / (h2 * (h1 + h2)))
    u_r[0] = 0.0
    u_rr[0] = 2.0 * (u[1] - u[0]) / r[1] ** 2
    a = r[-2] - r[-3]
    b = r[-1] - r[-2]
    u_r[-1] = (b / (a * (a + b)) * u[-3]
               - (a + b) / (a * b) * u[-2]
               + (a + 2 * b) / (b * (a + b)) * u[-1])
    u_rr[-1] = 2.0 * (u[-3] / (a * (a + b))
                      - u[-2] / (a * b)
                      + u[-1] / (b * (a + b)))
    return u_r, u_rr


def radial_curvature_parts(grid, u):
    """Return ``(u_r, u_rr, W, denom)`` with ``denom = H * W^3``.

    ``denom = u_rr + (n-1)(1+u_r^2) u_r / r`` with the even-reflection limit
    ``n * u_rr(0)`` at the axis; it is the denominator of the radial flow
    speed and shares the sign of H.
    """
    r = grid.r
    n = grid.n
    u_r, u_rr = radial_derivatives(grid, u)
    W2 = 1.0 + u_r ** 2
    denom = np.empty_like(u_r)
    denom[1:] = u_rr[1:] + (n - 1) * W2[1:] * u_r[1:] / r[1:]
    denom[0] = n * u_rr[0]
    return u_r, u_rr, np.sqrt(W2), denom


def compute_fields_radial(profile):
    """Geometric fields of a rotationally symmetric graph.

    The singular term (n-1) u_r / r is replaced by its even limit at the
    axis.  H may have any sign; callers enforce positivity where required.
    """
    grid = profile.grid
    u = profile.u
    u_r, u_rr, W, denom = radial_curvature_parts(grid, u)
    H = denom / W ** 3
    omega_nu = -1.0 / W
    F_nu = (grid.r * u_r - u) / W
    Fhat_nu = u / W
    v = Fhat_nu * H
    return GeometryFields(W=W, du=(u_r,), hess=(u_rr,), H=H,
                          omega_nu=omega_nu, F_nu=F_nu, Fhat_nu=Fhat_nu, v=v)


def _d1_matrix(u, h, axis):
    """Centered first derivative, second-order one-sided at the boundary."""
    d = np.empty_like(u)
    um = np.moveaxis(u, axis, 0)
    dm = np.moveaxis(d, axis, 0)
    dm[1:-1] = (um[2:] - um[:-2]) / (2 * h)
    dm[0] = (-3 * um[0] + 4 * um[1] - um[2]) / (2 * h)
    dm[-1] = (3 * um[-1] - 4 * um[-2] + um[-3]) / (2 * h)
    return d


def _d2_matrix(u, h, axis):
    """Centered second derivative, second-order one-sided at the boundary."""
    d = np.empty_like(u)
    um = np.moveaxis(u, axis, 0)
    dm = np.moveaxis(d, axis, 0)
    dm[1:-1] = (um[2:] - 2 * um[1:-1] + um[:-2]) / h ** 2
    dm[0] = (2 * um[0] - 5 * um[1] + 4 * um[2] - um[3]) / h ** 2
    dm[-1] = (2 * um[-1] - 5 * um[-2] + 4 * um[-3] - um[-4]) / h ** 2
    return d


def lattice_derivatives(state):
    """Gradient and Hessian entries ``(ux, uy, uxx, uyy, uxy)`` of a lattice state.

    The cross derivative at boundary rows/columns copies the nearest interior
    value; it only enters diagnostics there, never the solver residual.
    """
    u = state.u
    h = state.h
    ux = _d1_matrix(u, h, 0)
    uy = _d1_matrix(u, h, 1)
    uxx = _d2_matrix(u, h, 0)
    uyy = _d2_matrix(u, h, 1)
    uxy = np.empty_like(u)
    uxy[1:-1, 1:-1] = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * h * h)
    uxy[0, :] = uxy[1, :]
    uxy[-1, :] = uxy[-2, :]
    uxy[:, 0] = uxy[:, 1]
    uxy[:, -1] = uxy[:, -2]
    return ux, uy, uxx, uyy, uxy


def compute_fields_2d(state):
    """Geometric fields of a Cartesian graph state (n = 2)."""
    ux, uy, uxx, uyy, uxy = lattice_derivatives(state)
    W2 = 1.0 + ux ** 2 + uy ** 2
    W = np.sqrt(W2)
    # H * W^3, the trace form of the graph mean curvature
    denom = (1.0 + uy ** 2) * uxx - 2.0 * ux * uy * uxy + (1.0 + ux ** 2) * uyy
    H = denom / W ** 3
    u = state.u
    x = state.x
    x1 = x[:, None]
    x2 = x[None, :]
    omega_nu = -1.0 / W
    F_nu = (x1 * ux + x2 * uy - u) / W
    Fhat_nu = u / W
    v = Fhat_nu * H
    return GeometryFields(W=W, du=(ux, uy), hess=(uxx, uyy, uxy), H=H,
                          omega_nu=omega_nu, F_nu=F_nu, Fhat_nu=Fhat_nu, v=v)


def flow_speed(fields, h_min=1e-9):
    """Vertical speed ``u_t = -W/H`` of the graph under the flow.

    Raises :class:`CurvatureFloor` with the offending node index if the mean
    curvature is at or below ``h_min`` anywhere.
    """
    H = fields.H
    flat = H.ravel()
    idx = int(np.argmin(flat))
    if flat[idx] <= h_min:
        bad = idx if H.ndim == 1 else np.unravel_index(idx, H.shape)
        raise CurvatureFloor(bad, float(flat[idx]))
    return -fields.W / H
