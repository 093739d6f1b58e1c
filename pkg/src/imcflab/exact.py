"""Closed-form solutions of the graph flow: cones and expanding spheres.

The conical solutions ``height = slope(t) * r + offset`` and the spheres
expanding by the inverse-curvature law are the exact reference objects that
every solver and checker in this package is validated against.  All formulas
are evaluated in double precision with ``log``/``exp``; the companion RK4
integrators exist purely as independent cross-checks.

Everything here is a pure function of immutable values and is safe to call
concurrently.
"""

import math
from dataclasses import dataclass, field

from .errors import DomainError, SlopeBlowDown

# Integration of the slope ODE stops here: the 1/alpha term makes the
# right-hand side blow up at extinction.
ALPHA_GUARD = 1e-8

# Step-shrink factor applied near extinction, as a fraction of the estimated
# remaining lifetime (n-1)/2 * alpha^2.
_SHRINK = 0.1


@dataclass(frozen=True)
class ConeFamily:
    """Rotationally symmetric cone pair ``slope(t)*r`` and ``slope(t)*r + kappa``.

    Parameters
    ----------
    n : dimension of the hypersurface (>= 2).
    alpha0 : initial slope (> 0).
    kappa : vertical offset between the two cones (>= 0).
    """

    n: int
    alpha0: float
    kappa: float = 0.0

    def __post_init__(self):
        if self.n < 2 or int(self.n) != self.n:
            raise DomainError(f"dimension n = {self.n} must be an integer >= 2")
        if not self.alpha0 > 0:
            raise DomainError(f"alpha0 = {self.alpha0} must be > 0")
        if self.kappa < 0:
            raise DomainError(f"kappa = {self.kappa} must be >= 0")

    @property
    def lifetime(self):
        return cone_lifetime(self)

    def slope(self, t):
        return cone_slope(self, t)

    def gamma_beta(self, t):
        return cone_gamma_beta(self, t)

    def gamma(self, t):
        return cone_gamma_beta(self, t)[0]

    def height(self, r, t):
        """Upper cone height ``slope(t)*r + kappa``."""
        return cone_slope(self, t) * r + self.kappa

    def mean_curvature(self, r, t):
        return cone_mean_curvature(self, r, t)


@dataclass(frozen=True)
class ExpandingSphere:
    """Sphere of dimension ``n`` expanding with speed 1/H, i.e. rho' = rho/n."""

    center: tuple
    rho0: float
    n: int

    def __post_init__(self):
        if not self.rho0 > 0:
            raise DomainError(f"rho0 = {self.rho0} must be > 0")
        if self.n < 2:
            raise DomainError(f"n = {self.n} must be >= 2")

    def radius(self, t):
        return sphere_radius(self, t)


def cone_lifetime(family):
    """Time at which the cone family becomes a flat plane.

    Equals ``(n-1)/2 * log(1 + alpha0**2)``; monotone increasing in the
    initial slope and independent of the vertical offset.
    """
    return 0.5 * (family.n - 1) * math.log1p(family.alpha0 ** 2)


def _check_time(family, t):
    T = cone_lifetime(family)
    if t < 0 or t > T * (1 + 1e-12) + 1e-300:
        raise DomainError(f"t = {t} outside the cone lifetime [0, {T}]")
    return min(t, T)


def cone_slope(family, t):
    """Slope ``alpha(t) = sqrt((1+alpha0^2) exp(-2t/(n-1)) - 1)`` of the cone."""
    t = _check_time(family, t)
    y = (1.0 + family.alpha0 ** 2) * math.exp(-2.0 * t / (family.n - 1)) - 1.0
    return math.sqrt(max(y, 0.0))


def cone_gamma_beta(family, t):
    """Return ``(gamma(t), beta(t))`` for the conical solution.

    ``beta = 1/(1+alpha^2)`` is the squared vertical projection of the normal
    and ``gamma = (n-1)(1-beta)`` is the value the tracked scalar v attains on
    the cone.
    """
    t = _check_time(family, t)
    n = family.n
    beta0 = 1.0 / (1.0 + family.alpha0 ** 2)
    beta = beta0 * math.exp(2.0 * t / (n - 1))
    gamma = (n - 1) * (1.0 - beta)
    return gamma, beta


def cone_mean_curvature(family, r, t):
    """Mean curvature ``H = (n-1) alpha / (r sqrt(1+alpha^2))`` on the cone."""
    if r <= 0:
        raise DomainError(f"r = {r} must be > 0 (cone vertex is singular)")
    a = cone_slope(family, t)
    return (family.n - 1) * a / (r * math.sqrt(1.0 + a * a))


def _slope_rhs(n, a):
    return -(a + 1.0 / a) / (n - 1)


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _alpha_step_ok(a):
    return a > ALPHA_GUARD


def integrate_slope_ode(family, t, dt):
    """Integrate ``alpha' = -(alpha + 1/alpha)/(n-1)`` with classical RK4.

    Fixed step ``dt``, shrunk automatically near extinction where the
    right-hand side blows up.  Raises :class:`SlopeBlowDown` carrying the
    crossing time if the slope reaches zero before ``t``.
    """
    if dt <= 0:
        raise DomainError(f"dt = {dt} must be > 0")
    if t < 0:
        raise DomainError(f"t = {t} must be >= 0")
    n = family.n
    f = lambda a: _slope_rhs(n, a)
    a = family.alpha0
    tc = 0.0
    while tc < t - 1e-15 * max(t, 1.0):
        h = min(dt, t - tc, _SHRINK * 0.5 * (n - 1) * a * a)
        a_new = _rk4(f, a, h)
        if not (a_new > ALPHA_GUARD) or not math.isfinite(a_new):
            raise SlopeBlowDown(_bisect_crossing(f, a, tc, h))
        a, tc = a_new, tc + h
    return a


def slope_crossing_time(family, dt):
    """Blow-down time of the slope ODE, found by integration plus bisection.

    Independent numerical oracle for :func:`cone_lifetime`: integration stops
    at the guard ``alpha = 1e-8`` (where less than ``1e-16`` of lifetime
    remains) and the guard crossing is located by bisection on the last step.
    """
    if dt <= 0:
        raise DomainError(f"dt = {dt} must be > 0")
    n = family.n
    f = lambda a: _slope_rhs(n, a)
    a = family.alpha0
    tc = 0.0
    while True:
        h = min(dt, _SHRINK * 0.5 * (n - 1) * a * a)
        a_new = _rk4(f, a, h)
        if not (a_new > ALPHA_GUARD) or not math.isfinite(a_new):
            return _bisect_crossing(f, a, tc, h)
        a, tc = a_new, tc + h


def _bisect_crossing(f, a_start, t_start, h):
    """Bisect the step length for the sub-step where alpha hits the guard."""
    lo, hi = 0.0, h
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        a_mid = _rk4(f, a_start, mid)
        if math.isfinite(a_mid) and a_mid > ALPHA_GUARD:
            lo = mid
        else:
            hi = mid
    return t_start + 0.5 * (lo + hi)


def integrate_gamma_beta_ode(family, t, dt):
    """RK4 integration of ``beta' = 2 beta/(n-1)``, ``gamma' = 2(gamma/(n-1) - 1)``.

    Returns ``(gamma_numeric(t), beta_numeric(t))``; cross-check for
    :func:`cone_gamma_beta`.
    """
    if dt <= 0:
        raise DomainError(f"dt = {dt} must be > 0")
    t = _check_time(family, t)
    n = family.n

    def rhs(y):
        g, b = y
        return (2.0 * (g / (n - 1) - 1.0), 2.0 * b / (n - 1))

    def step(y, h):
        k1 = rhs(y)
        k2 = rhs((y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]))
        k3 = rhs((y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]))
        k4 = rhs((y[0] + h * k3[0], y[1] + h * k3[1]))
        return (y[0] + (h / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                y[1] + (h / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))

    beta0 = 1.0 / (1.0 + family.alpha0 ** 2)
    y = ((family.n - 1) * (1.0 - beta0), beta0)
    tc = 0.0
    while tc < t - 1e-15 * max(t, 1.0):
        h = min(dt, t - tc)
        y = step(y, h)
        tc += h
    return y


def sphere_radius(sphere, t):
    """Radius ``rho0 * exp(t/n)`` of a sphere expanding with speed 1/H."""
    if t < 0:
        raise DomainError(f"t = {t} must be >= 0")
    return sphere.rho0 * math.exp(t / sphere.n)


def cone_ball_tangent(beta, kappa_tilde, rho, n=2):
    """Ball tangent to the cone ``x_{n+1} = beta*|x| + kappa_tilde`` from above.

    Returns the sphere of radius ``rho`` centered on the graph axis at height
    ``rho*sqrt(1+beta^2) + kappa_tilde``; every point of the closed ball lies
    on or above the cone, with tangency on the circle
    ``|x| = rho*beta/sqrt(1+beta^2)``.  The subgraph of any cone is exactly
    the complement of the union of such balls over all radii and offsets.
    """
    if not beta > 0:
        raise DomainError(f"beta = {beta} must be > 0")
    if not rho > 0:
        raise DomainError(f"rho = {rho} must be > 0")
    center_height = rho * math.sqrt(1.0 + beta * beta) + kappa_tilde
    center = (0.0,) * n + (center_height,)
    return ExpandingSphere(center=center, rho0=rho, n=n)


def ball_tangency_radius(beta, rho):
    """Lateral radius of the tangency circle of :func:`cone_ball_tangent`."""
    return rho * beta / math.sqrt(1.0 + beta * beta)
