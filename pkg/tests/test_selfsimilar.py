import numpy as np
import pytest

from imcflab import (DomainError, elliptic_residual, flux_exponent,
                     flux_ratio, flux_target, selfsimilar_roundtrip,
                     shoot_profile)


def test_flux_target_formula():
    assert flux_target(1.0, 3) == pytest.approx(2.0)
    assert flux_target(2.0, 2) == pytest.approx(2.0)
    assert flux_target(1.0, 4) == pytest.approx(1.5)


def test_shooting_preconditions():
    with pytest.raises(DomainError):
        shoot_profile(1.0, 1.0, 3)        # vertex depth must be negative
    with pytest.raises(DomainError):
        shoot_profile(0.5, -1.0, 3)       # lambda below the growth threshold


def test_profile_starts_at_vertex():
    p = shoot_profile(1.0, -1.0, 3, r_max=100.0)
    u, ur = p(np.array([0.0]))
    assert u[0] == pytest.approx(-1.0)
    assert ur[0] == 0.0
    # matching at the series radius
    us, _ = p(np.array([0.999 * p.r_series]))
    ud, _ = p(np.array([1.001 * p.r_series]))
    assert abs(us[0] - ud[0]) < 1e-10


def test_flux_exponent_converges():
    p = shoot_profile(1.0, -1.0, 3)
    assert abs(flux_exponent(p) - 2.0) < 1e-8
    p = shoot_profile(2.0, -1.0, 2)
    assert abs(flux_exponent(p) - 2.0) < 1e-8


def test_vertex_depth_scales_out():
    q1 = flux_exponent(shoot_profile(1.0, -1.0, 3))
    q2 = flux_exponent(shoot_profile(1.0, -2.0, 3))
    assert abs(q1 - q2) < 1e-10


def test_profile_solves_the_ode():
    p = shoot_profile(1.0, -1.0, 3)
    assert elliptic_residual(p) < 1e-8


def test_flux_ratio_monotone_tail():
    p = shoot_profile(1.0, -1.0, 3)
    r = np.geomspace(100.0, p.r[-1], 20)
    f = flux_ratio(p, r)
    assert np.all(np.abs(f - 2.0) < 0.05)
    assert abs(f[-1] - 2.0) <= abs(f[0] - 2.0)


def test_roundtrip_small_scale():
    p = shoot_profile(2.0, -1.0, 2, r_max=1e3)
    out = selfsimilar_roundtrip(p, 0.01, R=20.0, M=400)
    assert out["max_discrepancy"] < 1e-2
