import numpy as np
import pytest

from imcflab import (ConeFamily, DomainError, MeanConvexityViolation,
                     SandwichViolation, SolverConfig, VertexSingularity,
                     cone_smooth_datum, epsilon_regularization_study,
                     estimate_extinction, hyperboloid_datum, init_radial,
                     make_radial_grid, random_sandwiched_pair, run_until, step)
from imcflab.diagnostics import comparison_test

CONE = ConeFamily(2, 1.0, 0.1)
GRID = make_radial_grid(20.0, 200, 2)


def small_sim(dt=1e-3, **kw):
    cfg = SolverConfig(dt=dt, **kw)
    return init_radial(hyperboloid_datum(GRID, 1.0, 0.1), CONE, GRID, cfg)


def test_config_validation():
    with pytest.raises(DomainError):
        SolverConfig(dt=-1.0)
    with pytest.raises(DomainError):
        SolverConfig(bc_kind="periodic")
    with pytest.raises(DomainError):
        SolverConfig(time_order=3)


def test_init_rejects_escaping_data():
    u = hyperboloid_datum(GRID, 1.0, 0.1) + 0.2   # above the upper cone
    with pytest.raises(SandwichViolation):
        init_radial(u, CONE, GRID, SolverConfig())


def test_init_rejects_nonconvex_data():
    u = hyperboloid_datum(GRID, 1.0, 0.1)
    u[50] += 0.05                                 # local concavity, H < 0
    with pytest.raises(MeanConvexityViolation):
        init_radial(u, CONE, GRID, SolverConfig(), enforce_sandwich=False)


def test_init_rejects_sharp_vertex():
    u = CONE.alpha0 * GRID.r + 0.05               # kinked cone graph
    with pytest.raises(VertexSingularity):
        init_radial(u, CONE, GRID, SolverConfig())


def test_init_records_Hu_bounds():
    sim = small_sim()
    assert 0 < sim.c0 <= sim.C0


def test_step_descends_nodewise():
    sim = small_sim()
    u0 = sim.profile.u.copy()
    step(sim)
    assert np.all(sim.profile.u <= u0 + 1e-12)
    assert sim.t == pytest.approx(1e-3)


def test_datum_sandwiched():
    for u in (hyperboloid_datum(GRID, 1.0, 0.1),
              cone_smooth_datum(GRID, 1.0, 0.1)):
        lower = CONE.alpha0 * GRID.r
        assert np.all(u >= lower - 1e-12)
        assert np.all(u <= lower + CONE.kappa + 1e-12)


def test_time_convergence_order():
    # second order in dt against a dt/8 reference
    def endpoint(dt):
        sim = small_sim(dt=dt)
        n = int(round(0.04 / dt))
        for _ in range(n):
            step(sim)
        return sim.profile.u

    ref = endpoint(5e-4)
    e1 = np.abs(endpoint(4e-3) - ref).max()
    e2 = np.abs(endpoint(2e-3) - ref).max()
    assert np.log2(e1 / e2) > 1.5


def test_extinction_estimate_small_domain():
    sim = small_sim(dt=2e-3)
    run_until(sim, 2.0 * CONE.lifetime)
    assert sim.stop_reason == "flattened"
    T_est = estimate_extinction(sim)
    assert abs(T_est - CONE.lifetime) < 0.1 * CONE.lifetime


def test_neumann_slope_tracks_cone():
    sim = small_sim()
    for _ in range(40):
        step(sim)
    r = GRID.r
    ur_R = (sim.profile.u[-1] - sim.profile.u[-2]) / (r[-1] - r[-2])
    assert ur_R == pytest.approx(CONE.slope(sim.t), abs=5e-3)


CONE_WIDE = ConeFamily(2, 1.0, 1.0)   # wide gap: vertices resolvable at h = 0.1


def test_random_pairs_ordered_and_sandwiched():
    rng = np.random.default_rng(7)
    for _ in range(5):
        ua, ub = random_sandwiched_pair(GRID, CONE_WIDE, rng)
        assert np.all(ua <= ub + 1e-12)
        for u in (ua, ub):
            init_radial(u, CONE_WIDE, GRID, SolverConfig())  # validates


def test_comparison_on_one_pair():
    rng = np.random.default_rng(3)
    ua, ub = random_sandwiched_pair(GRID, CONE_WIDE, rng)
    sims = []
    for u in (ua, ub):
        s = init_radial(u, CONE_WIDE, GRID, SolverConfig(dt=2e-3))
        run_until(s, 0.3 * CONE_WIDE.lifetime)
        sims.append(s)
    res = comparison_test(sims[0], sims[1])
    assert res.passed
    # fault injection: reversed pair must be flagged
    assert not comparison_test(sims[1], sims[0]).passed


def test_epsilon_family_stays_ordered():
    u0 = hyperboloid_datum(GRID, 1.0, 0.1)
    out = epsilon_regularization_study(u0, CONE, GRID, SolverConfig(dt=2e-3),
                                       [1e-2, 1e-3, 0.0],
                                       t_end=0.1 * CONE.lifetime)
    assert out["ordered"]
    assert out["max_ordering_violation"] <= 1e-8
