"""Checkers for every quantitative law the flow is known to satisfy.

Each checker is a pure function of trajectory data: same inputs, same result,
bit for bit.  A trajectory is a list of ``(t, profile)`` samples as produced
by the solvers.  Violations are data, not exceptions: a checker returns a
:class:`CheckResult` whose ``violations`` list cites the law id, the time and
the magnitude of each offense.

Law registry: HABOVE (global bound on H*u), HLOC (localized bound on H),
STAR (starshapedness preservation), VASYMP (far-field value of v against the
cone's gamma), VLOWER (lower bound on v away from extinction), COMPARE
(ordering of ordered data), SANDWICH (cone confinement), PLANE (terminal
plane height), DESCENT (monotone descent of the height).  SANDWICH and
DESCENT are enforced inside the solvers and re-verified here.

Theorem constants that the underlying theory leaves abstract are replaced by
recorded empirical margins plus fixed relative tolerances.
"""

import numpy as np
from dataclasses import dataclass, field

from .errors import DomainError, NotFlattened
from .geometry import (GraphState2D, RadialProfile, compute_fields_2d,
                       compute_fields_radial, radial_derivatives)


@dataclass
class CheckResult:
    law: str
    passed: bool
    violations: list = field(default_factory=list)  # (law, t, magnitude)
    details: dict = field(default_factory=dict)


@dataclass
class DiagnosticsReport:
    """Time-ordered rows of tracked extremal scalars plus violation records."""

    rows: list
    stop_reason: str = None
    flat_crossings: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    def column(self, key):
        return np.array([row[key] for row in self.rows])


# ---------------------------------------------------------------------------
# tracked scalars


def flat_sup(profile):
    """Sup of |u_r| over the inner half of the domain, the flattening gauge."""
    u_r, _ = radial_derivatives(profile.grid, profile.u)
    mask = profile.grid.r <= 0.5 * profile.grid.R
    return float(np.abs(u_r[mask]).max())


def support_product(profile, xbar):
    """Node-wise ``H * <F - xbar, nu>`` for an axis point ``xbar = (0, z0)``."""
    z0 = xbar[-1]
    f = compute_fields_radial(profile)
    u_r = f.du[0]
    support = (profile.grid.r * u_r - (profile.u - z0)) / f.W
    return f.H * support


def sandwich_violation(profile, cone):
    """Worst escape from the confining cone pair at the profile's time."""
    from .exact import cone_slope
    t = min(profile.t, cone.lifetime)
    lower = cone_slope(cone, t) * profile.grid.r
    below = lower - profile.u
    above = profile.u - lower - cone.kappa
    return float(max(below.max(), above.max(), 0.0))


def trajectory_row(profile, cone, probe_fraction=0.6, xbar=(0.0, -1.0)):
    """One diagnostics row: the extremal tracked scalars of a radial state."""
    from .exact import cone_gamma_beta
    grid = profile.grid
    f = compute_fields_radial(profile)
    u_r = f.du[0]
    r_p = probe_fraction * grid.R
    t = min(profile.t, cone.lifetime)
    gamma_t, _ = cone_gamma_beta(cone, t)
    half = grid.r <= 0.5 * grid.R
    return {
        "t": profile.t,
        "sup_Hu": float((f.H * profile.u).max()),
        "inf_v": float(f.v.min()),
        "far_v": float(np.interp(r_p, grid.r, f.v)),
        "gamma_t": gamma_t,
        "alpha_meas": float(np.interp(0.5 * grid.R, grid.r, u_r)),
        "min_star": float(support_product(profile, xbar).min()),
        "sandwich_viol": sandwich_violation(profile, cone),
        "flat_sup": float(np.abs(u_r[half]).max()),
    }


# ---------------------------------------------------------------------------
# individual laws


def check_global_H_bound(samples, tol_rel=1e-4):
    """HABOVE: sup H*u never exceeds its initial value (relative slack)."""
    sups = []
    for t, p in samples:
        f = compute_fields_radial(p) if isinstance(p, RadialProfile) \
            else compute_fields_2d(p)
        sups.append((t, float((f.H * p.u).max())))
    bound = sups[0][1] * (1.0 + tol_rel)
    violations = [("HABOVE", t, s - bound) for t, s in sups if s > bound]
    return CheckResult("HABOVE", not violations, violations,
                       {"initial_sup": sups[0][1],
                        "final_sup": sups[-1][1],
                        "margin": bound - max(s for _, s in sups)})


def _eta(profile, xbar, r):
    z0 = xbar[-1]
    d2 = profile.grid.r ** 2 + (profile.u - z0) ** 2
    return np.maximum(r * r - d2, 0.0) ** 2


def check_local_H_bound(initial, state, xbar, r):
    """HLOC: sup of the localized curvature ``eta*H`` against max(C0, 2n r^3)."""
    if not r > 1:
        raise DomainError(f"localization radius r = {r} must exceed 1")
    n = state.grid.n
    H0 = compute_fields_radial(initial).H
    C0 = float((_eta(initial, xbar, r) * H0).max())
    H = compute_fields_radial(state).H
    val = float((_eta(state, xbar, r) * H).max())
    bound = max(C0, 2.0 * n * r ** 3)
    ok = val <= bound * (1 + 1e-12)
    violations = [] if ok else [("HLOC", state.t, val - bound)]
    return CheckResult("HLOC", ok, violations,
                       {"C0_loc": C0, "sup_etaH": val, "bound": bound})


def check_starshaped(samples, xbar, delta=None, tol=1e-8):
    """STAR: the minimum of H <F - xbar, nu> never drops below its start.

    ``delta`` defaults to the measured initial minimum; the check is the
    discrete shadow of the maximum-principle preservation of quantitative
    starshapedness.
    """
    mins = [(t, float(support_product(p, xbar).min())) for t, p in samples]
    if delta is None:
        delta = mins[0][1]
    elif mins[0][1] < delta:
        raise DomainError(
            f"initial min {mins[0][1]:.3e} below the requested delta {delta}")
    violations = [("STAR", t, delta - m) for t, m in mins if m < delta - tol]
    return CheckResult("STAR", not violations, violations,
                       {"delta": delta, "final_min": mins[-1][1]})


def check_asymptotic_v(samples, cone, probe_fraction=0.6):
    """VASYMP: v at the probe radius tracks the cone value gamma(t).

    Tolerance ``5% of gamma + 0.5/r_p``, evaluated for t in [0.1 T, 0.8 T];
    the 1/r_p term accounts for the O(1/r) approach to the limit.
    """
    from .exact import cone_gamma_beta
    if not 0.5 <= probe_fraction <= 0.8:
        raise DomainError("probe_fraction must lie in [0.5, 0.8]")
    T = cone.lifetime
    violations = []
    checked = 0
    for t, p in samples:
        if not 0.1 * T <= t <= 0.8 * T:
            continue
        checked += 1
        r_p = probe_fraction * p.grid.R
        f = compute_fields_radial(p)
        v_p = float(np.interp(r_p, p.grid.r, f.v))
        gamma_t, _ = cone_gamma_beta(cone, t)
        tol = 0.05 * gamma_t + 0.5 / r_p
        err = abs(v_p - gamma_t)
        if err > tol:
            violations.append(("VASYMP", t, err - tol))
    return CheckResult("VASYMP", not violations, violations,
                       {"checked": checked})


def check_lower_bound_v(samples, cone, delta):
    """VLOWER: inf v stays above a positive run constant for t <= T - 3 delta.

    The constant is half of min(initial inf v, gamma(T - 3 delta)); rows
    beyond T - 3 delta are refused (the bound degenerates at extinction).
    """
    from .exact import cone_gamma_beta
    T = cone.lifetime
    t_max = T - 3.0 * delta
    if t_max <= 0:
        raise DomainError(f"delta = {delta} leaves no admissible window")
    inside = [(t, p) for t, p in samples if t <= t_max + 1e-12]
    if not inside:
        raise DomainError("no samples inside the admissible window")
    infs = [(t, float(compute_fields_radial(p).v.min())) for t, p in inside]
    gamma_cut, _ = cone_gamma_beta(cone, t_max)
    c = 0.5 * min(infs[0][1], gamma_cut)
    violations = [("VLOWER", t, c - m) for t, m in infs if m < c]
    passed = not violations and c > 0
    return CheckResult("VLOWER", passed, violations,
                       {"c": c, "min_inf_v": min(m for _, m in infs),
                        "skipped": len(samples) - len(inside)})


def _sample_pairs(a, b):
    a = getattr(a, "samples", a)
    b = getattr(b, "samples", b)
    for (ta, pa), (tb, pb) in zip(a, b):
        if abs(ta - tb) <= 1e-12 * max(1.0, abs(ta)):
            yield ta, pa, pb


def comparison_test(sim_a, sim_b, tol=1e-8):
    """COMPARE: ordered initial data stay ordered along the discrete flow.

    Accepts simulations or raw sample lists on the same grid and boundary
    family with ``u_a(., 0) <= u_b(., 0)``.
    """
    violations = []
    gaps = []
    count = 0
    for t, pa, pb in _sample_pairs(sim_a, sim_b):
        count += 1
        worst = float((pa.u - pb.u).max())
        gaps.append((t, float((pb.u - pa.u).max())))
        if worst > tol:
            violations.append(("COMPARE", t, worst))
    if count == 0:
        raise DomainError("no time-aligned sample pairs to compare")
    return CheckResult("COMPARE", not violations, violations,
                       {"pairs": count, "max_gap": max(g for _, g in gaps)})


def check_plane_convergence(profile, kappa, flat_eps, stop_reason):
    """PLANE: a flattened run ends within [0, kappa] of a horizontal plane.

    ``h_measured`` is the mean height over the inner quarter of the domain;
    the limit height is only bracketed, never asserted to a specific value.
    Returns ``(h_measured, CheckResult)``.
    """
    if stop_reason != "flattened":
        raise NotFlattened(f"run stopped with reason {stop_reason!r}")
    r = profile.grid.r
    mask = r <= 0.25 * profile.grid.R
    h = float(profile.u[mask].mean())
    dev = float(np.abs(profile.u[mask] - h).max())
    dev_bound = 2.0 * flat_eps * 0.25 * profile.grid.R
    tol = 1e-3
    violations = []
    if not -tol <= h <= kappa + tol:
        violations.append(("PLANE", profile.t,
                           max(-tol - h, h - kappa - tol)))
    if dev > dev_bound:
        violations.append(("PLANE", profile.t, dev - dev_bound))
    return h, CheckResult("PLANE", not violations, violations,
                          {"h_measured": h, "sup_deviation": dev})


def check_sandwich(samples, cone, tol):
    """SANDWICH: confinement between the evolving cone pair, within ``tol``."""
    violations = []
    worst = 0.0
    for t, p in samples:
        if isinstance(p, RadialProfile):
            viol = sandwich_violation(p, cone)
        else:
            viol = _sandwich_violation_2d(p, cone)
        worst = max(worst, viol)
        if viol > tol:
            violations.append(("SANDWICH", t, viol - tol))
    return CheckResult("SANDWICH", not violations, violations,
                       {"max_violation": worst})


def _sandwich_violation_2d(state, cone):
    # evaluated on the inscribed disk only: square corners see boundary
    # artifacts from the edge conditions
    from .exact import cone_slope
    x = state.x
    rr = np.hypot(x[:, None], x[None, :])
    mask = rr <= state.L
    t = min(state.t, cone.lifetime)
    lower = cone_slope(cone, t) * rr
    below = (lower - state.u)[mask]
    above = (state.u - lower - cone.kappa)[mask]
    return float(max(below.max(), above.max(), 0.0))


def check_descent(samples, tol):
    """DESCENT: the height is node-wise nonincreasing between samples."""
    violations = []
    worst = 0.0
    for (t0, p0), (t1, p1) in zip(samples, samples[1:]):
        rise = float((p1.u - p0.u).max())
        worst = max(worst, rise)
        if rise > tol:
            violations.append(("DESCENT", t1, rise - tol))
    return CheckResult("DESCENT", not violations, violations,
                       {"max_rise": worst})


LAWS = {
    "HABOVE": check_global_H_bound,
    "HLOC": check_local_H_bound,
    "STAR": check_starshaped,
    "VASYMP": check_asymptotic_v,
    "VLOWER": check_lower_bound_v,
    "COMPARE": comparison_test,
    "SANDWICH": check_sandwich,
    "PLANE": check_plane_convergence,
    "DESCENT": check_descent,
}
