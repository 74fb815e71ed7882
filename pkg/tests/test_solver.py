import math

import numpy as np
import pytest

from oubstop import (
    ConvergenceError,
    OUBParams,
    SolverConfig,
    TimeGrid,
    backward_solve,
    boundary_eval,
    log_partition,
    picard_solve,
    solve_boundary,
    uniform_partition,
)


def test_log_partition_endpoints_and_midpoint():
    grid = log_partition(500)
    assert grid.nodes[0] == 0.0
    assert grid.nodes[-1] == 1.0
    assert grid.n == 500
    # ln(1 + 0.5*(e-1))
    assert grid.nodes[250] == pytest.approx(0.6201145069582775, abs=1e-15)
    assert np.all(np.diff(grid.nodes) > 0.0)
    # spacing shrinks towards the horizon
    d = np.diff(grid.nodes)
    assert d[-1] < d[0]


def test_uniform_partition():
    grid = uniform_partition(10)
    assert np.allclose(grid.nodes, np.linspace(0.0, 1.0, 11))


def test_time_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.5, 0.9]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.1, 0.5, 1.0]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.5, 0.5, 1.0]))


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(n=1)
    with pytest.raises(ValueError):
        SolverConfig(eps=0.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)
    with pytest.raises(ValueError):
        SolverConfig(mesh_kind="spline")


def test_picard_terminal_pinning():
    for z in (-5.0, 0.0, 2.5):
        sol = picard_solve(OUBParams(alpha=1.0, gamma=1.0, z=z),
                           SolverConfig(n=60))
        assert sol.beta[-1] == z
        assert sol.final_residual < 1e-4
        assert sol.method == "picard"


def test_picard_requires_canonical():
    with pytest.raises(ValueError):
        picard_solve(OUBParams(alpha=1.0, gamma=1.0, z=0.0, horizon=2.0))


def test_picard_is_deterministic():
    p = OUBParams(alpha=1.0, gamma=1.0, z=-5.0)
    a = picard_solve(p, SolverConfig(n=80))
    b = picard_solve(p, SolverConfig(n=80))
    assert np.array_equal(a.beta, b.beta)
    assert a.iterations == b.iterations


def test_picard_alpha_parity_identical():
    cfg = SolverConfig(n=200)
    sp = picard_solve(OUBParams(alpha=2.0, gamma=1.0, z=0.0), cfg)
    sm = picard_solve(OUBParams(alpha=-2.0, gamma=1.0, z=0.0), cfg)
    assert np.max(np.abs(sp.beta - sm.beta)) <= 1e-10


def test_picard_brownian_bridge_limit():
    sol = picard_solve(OUBParams(alpha=1e-4, gamma=1.0, z=0.0),
                       SolverConfig(n=200))
    t = sol.grid.nodes
    mask = t <= 0.95
    ref = 0.8399 * np.sqrt(1.0 - t[mask])
    assert np.max(np.abs(sol.beta[mask] - ref)) < 0.02


def test_picard_non_convergence_error():
    with pytest.raises(ConvergenceError) as err:
        picard_solve(OUBParams(alpha=1.0, gamma=1.0, z=0.0),
                     SolverConfig(n=50, max_iter=1))
    assert err.value.iterations == 1
    assert err.value.residual > 1e-4
    assert err.value.beta_last.shape == (51,)


def test_backward_matches_picard():
    p = OUBParams(alpha=1.0, gamma=1.0, z=0.0)
    cfg = SolverConfig(n=120)
    sp = picard_solve(p, cfg)
    sb = backward_solve(p, cfg)
    assert sb.method == "backward"
    assert sb.beta[-1] == 0.0
    assert sb.beta[-2] == 0.0
    assert np.max(np.abs(sp.beta - sb.beta)) < 5e-3


def test_mesh_refinement_converges():
    p = OUBParams(alpha=1.0, gamma=1.0, z=0.0)
    sols = {n: picard_solve(p, SolverConfig(n=n)) for n in (10, 100, 500)}
    d1 = np.max(np.abs(sols[10].beta
                       - boundary_eval(sols[100], sols[10].grid.nodes)))
    d2 = np.max(np.abs(sols[100].beta
                       - boundary_eval(sols[500], sols[100].grid.nodes)))
    assert d2 < d1


def test_backward_mesh_refinement_converges():
    p = OUBParams(alpha=1.0, gamma=1.0, z=0.0)
    sols = {n: backward_solve(p, SolverConfig(n=n)) for n in (10, 60, 150)}
    d1 = np.max(np.abs(sols[10].beta
                       - boundary_eval(sols[60], sols[10].grid.nodes)))
    d2 = np.max(np.abs(sols[60].beta
                       - boundary_eval(sols[150], sols[60].grid.nodes)))
    assert d2 < d1


def test_gamma_scaling_at_zero_pinning():
    cfg = SolverConfig(n=200)
    s1 = picard_solve(OUBParams(alpha=1.0, gamma=1.0, z=0.0), cfg)
    s2 = picard_solve(OUBParams(alpha=1.0, gamma=2.0, z=0.0), cfg)
    assert np.max(np.abs(s2.beta - 2.0 * s1.beta)) < 2e-3


def test_boundary_eval_interpolation(std_solution):
    sol = std_solution
    t = sol.grid.nodes
    assert np.array_equal(boundary_eval(sol, t), sol.beta)
    assert boundary_eval(sol, 1.0) == sol.beta[-1]
    mid = 0.5 * (t[3] + t[4])
    assert boundary_eval(sol, mid) == pytest.approx(
        0.5 * (sol.beta[3] + sol.beta[4]), rel=1e-12)
    with pytest.raises(ValueError):
        boundary_eval(sol, 1.5)
    with pytest.raises(ValueError):
        boundary_eval(sol, -0.1)


def test_pulling_level_equivariance():
    cfg = SolverConfig(n=150)
    shifted = solve_boundary(OUBParams(alpha=1.0, gamma=1.0, z=5.0,
                                       theta=5.0), cfg)
    base = solve_boundary(OUBParams(alpha=1.0, gamma=1.0, z=0.0), cfg)
    assert np.max(np.abs(shifted.values - (base.values + 5.0))) <= 1e-9
    assert shifted.values[-1] == 5.0


def test_horizon_equivariance():
    # beta over horizon T from the canonical solve equals the directly
    # rescaled boundary: beta_{a, g, T}(t) = beta_{aT, g sqrt(T), 1}(t / T)
    cfg = SolverConfig(n=150)
    T = 2.0
    general = solve_boundary(OUBParams(alpha=2.0, gamma=1.0, z=0.0,
                                       horizon=T), cfg)
    canonical = picard_solve(OUBParams(alpha=4.0, gamma=math.sqrt(2.0),
                                       z=0.0), cfg)
    assert np.max(np.abs(general.values - canonical.beta)) <= 1e-9
    tau = canonical.grid.nodes
    assert np.max(np.abs(general.nodes - T * tau)) <= 1e-12
    # eval in original time hits the canonical values at the nodes
    assert np.max(np.abs(general.eval(T * tau) - canonical.beta)) <= 1e-9


def test_slope_horizon_scaling_identity():
    # beta^{alpha r, gamma, T}(t) = beta^{alpha, gamma r^{-1/2}, rT}(rt)
    cfg = SolverConfig(n=120)
    r = 2.0
    lhs = solve_boundary(OUBParams(alpha=1.0 * r, gamma=1.0, z=0.0,
                                   horizon=1.0), cfg)
    rhs = solve_boundary(OUBParams(alpha=1.0, gamma=1.0 / math.sqrt(r),
                                   z=0.0, horizon=r * 1.0), cfg)
    t = lhs.nodes
    assert np.max(np.abs(lhs.values - rhs.eval(r * t))) <= 1e-9


def test_solved_boundary_eval_endpoints():
    sol = solve_boundary(OUBParams(alpha=1.0, gamma=1.0, z=0.3, theta=0.1,
                                   horizon=2.0), SolverConfig(n=60))
    assert sol.values[-1] == 0.3
    assert sol.eval(2.0) == 0.3
    assert sol.eval(0.0) == sol.values[0]


def test_solve_boundary_method_choice():
    p = OUBParams(alpha=1.0, gamma=1.0, z=0.0)
    cfg = SolverConfig(n=60)
    sb = solve_boundary(p, cfg, method="backward")
    assert sb.canonical.method == "backward"
    with pytest.raises(ValueError):
        solve_boundary(p, cfg, method="newton")
