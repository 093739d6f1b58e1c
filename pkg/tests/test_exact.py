import math

import numpy as np
import pytest

from imcflab import (ConeFamily, DomainError, ExpandingSphere, SlopeBlowDown,
                     ball_tangency_radius, cone_ball_tangent, cone_gamma_beta,
                     cone_lifetime, cone_mean_curvature, cone_slope,
                     integrate_gamma_beta_ode, integrate_slope_ode,
                     slope_crossing_time, sphere_radius)


def test_lifetime_formula():
    cone = ConeFamily(2, 1.0, 0.1)
    assert cone.lifetime == pytest.approx(0.5 * math.log(2.0), abs=1e-15)
    # independent of the vertical offset, increasing in the slope
    assert ConeFamily(2, 1.0, 5.0).lifetime == cone.lifetime
    assert ConeFamily(2, 2.0, 0.0).lifetime > cone.lifetime
    assert ConeFamily(3, math.sqrt(math.e - 1.0), 0.0).lifetime == \
        pytest.approx(1.0, abs=1e-14)


def test_slope_endpoints():
    cone = ConeFamily(3, 1.7, 0.0)
    assert cone_slope(cone, 0.0) == pytest.approx(1.7, abs=1e-15)
    assert cone_slope(cone, cone.lifetime) == pytest.approx(0.0, abs=1e-8)


def test_gamma_beta_closed_form():
    cone = ConeFamily(2, 1.0, 0.0)
    g0, b0 = cone_gamma_beta(cone, 0.0)
    assert b0 == pytest.approx(0.5)
    assert g0 == pytest.approx(0.5)
    gT, bT = cone_gamma_beta(cone, cone.lifetime)
    assert bT == pytest.approx(1.0, abs=1e-12)
    assert gT == pytest.approx(0.0, abs=1e-12)
    # gamma = (n-1)(1 - beta) pointwise
    for t in np.linspace(0.0, cone.lifetime, 7):
        g, b = cone_gamma_beta(cone, t)
        assert g == pytest.approx((cone.n - 1) * (1.0 - b), abs=1e-14)


def test_rk4_matches_closed_form():
    cone = ConeFamily(2, 1.3, 0.0)
    T = cone.lifetime
    for t in (0.3 * T, 0.7 * T, 0.99 * T):
        a = integrate_slope_ode(cone, t, 5e-4)
        assert abs(a - cone_slope(cone, t)) < 1e-8
        g, b = integrate_gamma_beta_ode(cone, t, 5e-4)
        ge, be = cone_gamma_beta(cone, t)
        assert abs(g - ge) < 1e-8 and abs(b - be) < 1e-8


def test_crossing_time_matches_lifetime():
    for n, a0 in ((2, 0.6), (3, 2.0)):
        cone = ConeFamily(n, a0, 0.0)
        assert abs(slope_crossing_time(cone, 1e-3) - cone.lifetime) < 1e-8


def test_slope_blowdown_past_lifetime():
    cone = ConeFamily(2, 0.5, 0.0)
    with pytest.raises(SlopeBlowDown) as exc:
        integrate_slope_ode(cone, 2.0 * cone.lifetime, 1e-3)
    assert abs(exc.value.crossing_time - cone.lifetime) < 1e-7


def test_domain_guards():
    with pytest.raises(DomainError):
        ConeFamily(1, 1.0, 0.0)
    with pytest.raises(DomainError):
        ConeFamily(2, 0.0, 0.0)
    with pytest.raises(DomainError):
        ConeFamily(2, 1.0, -0.1)
    cone = ConeFamily(2, 1.0, 0.0)
    with pytest.raises(DomainError):
        cone_slope(cone, -0.1)
    with pytest.raises(DomainError):
        cone_slope(cone, 1.01 * cone.lifetime)
    with pytest.raises(DomainError):
        cone_mean_curvature(cone, 0.0, 0.0)


def test_cone_curvature_decays():
    cone = ConeFamily(3, 1.0, 0.0)
    assert cone_mean_curvature(cone, 1.0, 0.0) == \
        pytest.approx(2.0 / math.sqrt(2.0))
    assert cone_mean_curvature(cone, 10.0, 0.0) == \
        pytest.approx(0.1 * cone_mean_curvature(cone, 1.0, 0.0))


def test_expanding_sphere():
    s = ExpandingSphere(center=(0.0, 0.0, 1.0), rho0=2.0, n=2)
    assert sphere_radius(s, 0.0) == 2.0
    assert sphere_radius(s, 2.0) == pytest.approx(2.0 * math.e)


def test_ball_tangent_stays_above_cone():
    beta, kt, rho = 0.8, 0.3, 1.5
    ball = cone_ball_tangent(beta, kt, rho, n=2)
    zc = ball.center[-1]
    r = np.linspace(0.0, 5.0, 400)
    cone_height = beta * r + kt
    # lowest point of the ball over each lateral radius
    inside = r <= rho
    ball_bottom = np.where(inside, zc - np.sqrt(np.maximum(
        rho ** 2 - r ** 2, 0.0)), np.inf)
    assert np.all(ball_bottom >= cone_height - 1e-12)
    rt = ball_tangency_radius(beta, rho)
    gap = (zc - math.sqrt(rho ** 2 - rt ** 2)) - (beta * rt + kt)
    assert abs(gap) < 1e-12
