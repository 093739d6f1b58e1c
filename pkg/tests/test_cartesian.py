import numpy as np
import pytest

from imcflab import (ConeFamily, MeanConvexityViolation, SandwichViolation,
                     SolverConfig, elliptical_datum_2d, hyperboloid_datum,
                     init_2d, init_radial, make_radial_grid, radial_datum_2d,
                     ring_oscillation, run_2d, step_2d)
from imcflab.cartesian import disk_mask
from imcflab.diagnostics import _sandwich_violation_2d
from imcflab.radial import run_until

CONE = ConeFamily(2, 1.0, 0.1)
L, M2 = 4.0, 10


def small_sim(dt=2e-3, m=M2, datum=radial_datum_2d, **dkw):
    cfg = SolverConfig(dt=dt)
    u0 = datum(L, m, CONE.alpha0, CONE.kappa, **dkw)
    return init_2d(u0, CONE, L, m, cfg)


def test_init_rejects_escaping_data():
    u0 = radial_datum_2d(L, M2, 1.0, 0.1) + 0.2
    with pytest.raises(SandwichViolation):
        init_2d(u0, CONE, L, M2, SolverConfig())


def test_init_rejects_nonconvex_data():
    u0 = radial_datum_2d(L, M2, 1.0, 0.1)
    u0[M2, M2] += 0.5
    with pytest.raises(MeanConvexityViolation):
        init_2d(u0, CONE, L, M2, SolverConfig(), enforce_sandwich=False)


def test_elliptical_datum_sandwiched():
    for ratio in (1.2, 2.0, 5.0):
        u0 = elliptical_datum_2d(L, M2, 1.0, 0.3, ratio=ratio)
        x = np.linspace(-L, L, 2 * M2 + 1)
        rho = np.hypot(x[:, None], x[None, :])
        assert np.all(u0 >= rho - 1e-12)
        assert np.all(u0 <= rho + 0.3 + 1e-12)


def test_swap_symmetry_preserved():
    sim = small_sim()
    for _ in range(5):
        step_2d(sim)
    u = sim.state.u
    assert np.abs(u - u.T).max() < 1e-12
    assert np.abs(u - u[::-1, :]).max() < 1e-12


def test_step_descends_and_stays_sandwiched():
    sim = small_sim()
    u0 = sim.state.u.copy()
    for _ in range(5):
        step_2d(sim)
    mask = disk_mask(sim.state)
    assert np.all((sim.state.u - u0)[mask] <= 1e-10)
    assert _sandwich_violation_2d(sim.state, CONE) <= 1e-8


def test_matches_radial_solver_on_disk():
    t_end = 0.05
    sim = small_sim(m=16)
    run_2d(sim, t_end)
    grid = make_radial_grid(20.0, 400, 2)
    rsim = init_radial(hyperboloid_datum(grid, 1.0, 0.1), CONE, grid,
                       SolverConfig(dt=2e-3))
    run_until(rsim, t_end)
    x = sim.state.x
    rho = np.hypot(x[:, None], x[None, :])
    mask = disk_mask(sim.state)
    ur = np.interp(rho, grid.r, rsim.profile.u)
    assert np.abs((sim.state.u - ur)[mask]).max() < 0.02


def test_ring_relaxation_monotone():
    u0 = elliptical_datum_2d(L, 12, 1.0, 0.3, ratio=2.0)
    cone = ConeFamily(2, 1.0, 0.3)
    sim = init_2d(u0, cone, L, 12, SolverConfig(dt=2e-3))
    radii = [1.0, 2.0]
    osc = [ring_oscillation(sim.state, radii)]
    for _ in range(3):
        for _ in range(5):
            step_2d(sim)
        osc.append(ring_oscillation(sim.state, radii))
    osc = np.array(osc)
    assert np.all(np.diff(osc, axis=0) <= 1e-10)
    assert osc[0].max() > 1e-3   # the probe actually sees asymmetry
