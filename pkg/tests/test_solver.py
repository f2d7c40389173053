import numpy as np
import pytest

from hjhom import (EnvironmentSpec, GridFunction, GridSpec, SchemeParams,
                   SolverError, check_monotone, compute_dt, make_environment,
                   solve_ivp, step)
from hjhom.solver import diffusion_stencil_weights
from tests.conftest import hopf_lax_oracle
from hjhom.environment import analytic_lagrangian


class FlatEnv:
    """Minimal protocol stub with a prescribed dH/dp bound and no diffusion."""

    dimension = 1
    a_max = 0.0
    max_abs_H0 = 0.0
    p_argmin = 0.0
    period_hint = 1.0

    def dHdp_bound(self, pcap):
        return 3.0

    def eval_H(self, p, x, t):
        return np.zeros(np.broadcast(p[0], np.asarray(x)[0]).shape)

    def eval_A_diag(self, x, t):
        return np.zeros((1,) + np.shape(np.asarray(x)[0]))


def _grid1d(points=64, extent=4.0, boundary="periodic"):
    return GridSpec(dimension=1, extent=(extent,), points=(points,),
                    boundary=boundary)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(dimension=1, extent=(4.0,), points=(4,))
    with pytest.raises(ValueError):
        GridSpec(dimension=1, extent=(-1.0,), points=(32,))
    with pytest.raises(ValueError):
        GridSpec(dimension=1, extent=(4.0,), points=(32,), boundary="dirichlet")


def test_dt_formula_advective():
    # dt = safety * dx / (n * alpha): alpha=3, dx=0.01, n=1, safety 0.9
    grid = GridSpec(dimension=1, extent=(1.0,), points=(101,),
                    boundary="linear-extrapolation")
    u = GridFunction(grid, np.zeros(101))
    dt = compute_dt(u, FlatEnv(), 1.0, SchemeParams(max_gradient_cap=1.0))
    assert dt == pytest.approx(0.003, rel=1e-12)


def test_dt_formula_diffusive():
    grid = GridSpec(dimension=1, extent=(1.0,), points=(101,),
                    boundary="linear-extrapolation")
    u = GridFunction(grid, np.zeros(101))
    env = FlatEnv()
    env.a_max = 1.0
    dt = compute_dt(u, env, 1.0, SchemeParams(max_gradient_cap=1.0))
    # the one-mechanism diffusive bound 0.9 * dx^2/(2 n eps a) caps the step;
    # the combined budget sits just below it because advection is also active
    assert dt <= 0.9 * 5e-5
    assert dt >= 0.85 * 0.9 * 5e-5
    # doubling grid resolution with diffusion dominant shrinks dt ~x4
    grid2 = GridSpec(dimension=1, extent=(1.0,), points=(201,),
                     boundary="linear-extrapolation")
    dt2 = compute_dt(GridFunction(grid2, np.zeros(201)), env, 1.0,
                     SchemeParams(max_gradient_cap=1.0))
    assert 3.8 <= dt / dt2 <= 4.0


def test_constant_solution_stays(const_env):
    grid = _grid1d()
    u0 = GridFunction(grid, np.full(64, 5.0))
    res = solve_ivp(u0, const_env, 1.0, SchemeParams(max_gradient_cap=2.0), 0.5)
    assert np.max(np.abs(res.final.values - 5.0)) == 0.0


def test_affine_uniform_decrease(const_env):
    # u = p x decreases by dt |p|^3 exactly (extrapolation keeps it affine)
    grid = _grid1d(boundary="linear-extrapolation", points=128)
    x = grid.mesh()[0]
    p = 1.2
    u0 = GridFunction(grid, p * x)
    params = SchemeParams(max_gradient_cap=3.0)
    dt = compute_dt(u0, const_env, 1.0, params)
    u1 = step(u0, const_env, 1.0, params, dt)
    assert np.max(np.abs(u1.values - (p * x - dt * p ** 3))) < 1e-13


def test_spatially_constant_potential_ode():
    #  u0 = 0 with H = |p|^3 + c gives u(T) = -c T
    spec = EnvironmentSpec(family="constant", gamma=3.0, growth_const=1.5,
                           sigma_shape=(0.0,), v0=0.4)
    env = make_environment(spec)
    grid = _grid1d()
    u0 = GridFunction(grid, np.zeros(64))
    res = solve_ivp(u0, env, 1.0, SchemeParams(max_gradient_cap=1.0), 0.75)
    assert np.max(np.abs(res.final.values + 0.4 * 0.75)) < 1e-12


def test_cfl_rejection_reports_admissible(const_env):
    grid = _grid1d()
    u0 = GridFunction(grid, np.zeros(64))
    params = SchemeParams(max_gradient_cap=2.0)
    dt_ok = compute_dt(u0, const_env, 1.0, params)
    with pytest.raises(SolverError, match="admissible"):
        step(u0, const_env, 1.0, params, 3.0 * dt_ok)


def test_gradient_monitor_trips(const_env):
    grid = _grid1d(boundary="linear-extrapolation")
    x = grid.mesh()[0]
    u0 = GridFunction(grid, 3.0 * np.abs(x))
    params = SchemeParams(max_gradient_cap=1.0)
    with pytest.raises(SolverError, match="cap"):
        step(u0, const_env, 1.0, params, 1e-4)


def test_riemann_cone_matches_hopf_lax(const_env):
    # 1D cone, Godunov: compare against the dense-minimization oracle
    grid = GridSpec(dimension=1, extent=(8.0,), points=(801,),
                    boundary="linear-extrapolation")
    x = grid.mesh()[0]
    u0 = GridFunction(grid, np.abs(x))
    params = SchemeParams(max_gradient_cap=2.5, num_hamiltonian="godunov-1d")
    res = solve_ivp(u0, const_env, 1.0, params, 0.5)
    L = analytic_lagrangian(3.0)
    exact = hopf_lax_oracle(np.abs, L, x, 0.5, y_range=(-6, 6))
    mask = np.abs(x) <= 2.0
    dx = grid.dx[0]
    assert np.max(np.abs(res.final.values - exact)[mask]) <= 2.0 * np.sqrt(dx)
    # and well below that in practice
    assert np.max(np.abs(res.final.values - exact)[mask]) < 0.02


def test_self_convergence_periodic(periodic_env):
    # halving dx must shrink the self-convergence gap (Richardson-style)
    sols = {}
    for pts in (128, 256, 512):
        grid = _grid1d(points=pts, extent=4.0)
        x = grid.mesh()[0]
        u0 = GridFunction(grid, 0.5 * np.sin(2 * np.pi * x / 4.0))
        params = SchemeParams(max_gradient_cap=4.0)
        sols[pts] = solve_ivp(u0, periodic_env, 1.0, params, 0.4).final.values
    e1 = np.max(np.abs(sols[128] - sols[256][::2]))
    e2 = np.max(np.abs(sols[256] - sols[512][::2]))
    assert e2 < 0.8 * e1


def test_discrete_comparison_random_pairs(periodic_env, checkerboard_env,
                                          fourier_env, const_env):
    rng = np.random.default_rng(7)
    grid = _grid1d(points=96)
    x = grid.mesh()[0]
    params = SchemeParams(max_gradient_cap=4.0)
    for env in (const_env, periodic_env, checkerboard_env, fourier_env):
        for _ in range(3):
            a1, a2, ph = rng.uniform(0.1, 0.4, 3)
            base = a1 * np.sin(2 * np.pi * x / 4 + ph) + a2 * np.cos(4 * np.pi * x / 4)
            bump = rng.uniform(0.05, 0.3) * (1.0 + np.sin(2 * np.pi * x / 4 + ph))
            lo = solve_ivp(GridFunction(grid, base), env, 1.0, params, 0.3)
            hi = solve_ivp(GridFunction(grid, base + bump), env, 1.0, params, 0.3)
            assert np.max(lo.final.values - hi.final.values) <= 1e-12


def test_consistency_one_step_smooth(const_env):
    # one step reproduces u_t = -H(Du) for smooth data to O(dx) accuracy
    grid = _grid1d(points=1024, extent=4.0)
    x = grid.mesh()[0]
    u0 = GridFunction(grid, 0.3 * np.sin(2 * np.pi * x / 4.0))
    params = SchemeParams(max_gradient_cap=2.0)
    dt = 1e-6
    u1 = step(u0, const_env, 1.0, params, dt, check_cfl=False)
    du = 0.3 * (2 * np.pi / 4.0) * np.cos(2 * np.pi * x / 4.0)
    rhs_exact = -np.abs(du) ** 3
    rhs_num = (u1.values - u0.values) / dt
    assert np.max(np.abs(rhs_num - rhs_exact)) < 5.0 * grid.dx[0]


def test_consistency_diffusion_second_order():
    spec = EnvironmentSpec(family="constant", gamma=3.0, growth_const=1.5,
                           sigma_shape=(1.0,))
    env = make_environment(spec)
    errs = []
    for pts in (256, 512):
        grid = _grid1d(points=pts, extent=4.0)
        x = grid.mesh()[0]
        w = 2 * np.pi / 4.0
        u0 = GridFunction(grid, 0.3 * np.sin(w * x))
        params = SchemeParams(max_gradient_cap=2.0)
        dt = 1e-8
        u1 = step(u0, env, 1.0, params, dt, check_cfl=False)
        du = 0.3 * w * np.cos(w * x)
        d2u = -0.3 * w * w * np.sin(w * x)
        rhs_exact = d2u - np.abs(du) ** 3
        errs.append(np.max(np.abs((u1.values - u0.values) / dt - rhs_exact)))
    # the diffusion part is second order; the Hamiltonian part first order
    assert errs[1] < 0.6 * errs[0]


def test_translation_equivariance_bitwise(checkerboard_env):
    env = checkerboard_env
    g1 = GridSpec(dimension=1, extent=(4.0,), points=(64,), origin=(-2.0,),
                  boundary="periodic")
    g2 = GridSpec(dimension=1, extent=(4.0,), points=(64,), origin=(-1.5,),
                  boundary="periodic")
    vals = 0.4 * np.sin(2 * np.pi * g1.mesh()[0] / 4)
    params = SchemeParams(max_gradient_cap=3.0)
    shift = (0.5, 0.25)
    rA = solve_ivp(GridFunction(g1, vals, 0.0), env.translated(shift), 1.0,
                   params, 0.2)
    rB = solve_ivp(GridFunction(g2, vals, 0.25), env, 1.0, params, 0.45)
    assert np.array_equal(rA.final.values, rB.final.values)


def test_stability_bound_monitor(periodic_env):
    # the a priori sup bound is checked on every run; a normal solve passes
    grid = _grid1d(points=128)
    x = grid.mesh()[0]
    u0 = GridFunction(grid, 0.2 * np.sin(2 * np.pi * x / 4))
    res = solve_ivp(u0, periodic_env, 1.0, SchemeParams(max_gradient_cap=3.0), 1.0)
    bound = 0.2 + 1.0 * periodic_env.max_abs_H0
    assert np.max(np.abs(res.final.values)) <= bound + 1e-9


def test_snapshots_at_requested_times(const_env):
    grid = _grid1d()
    u0 = GridFunction(grid, np.zeros(64))
    res = solve_ivp(u0, const_env, 1.0, SchemeParams(max_gradient_cap=1.0),
                    1.0, snapshot_times=[0.25, 0.5, 0.75])
    assert res.snapshot_times == [0.25, 0.5, 0.75]
    assert all(s.time_stamp == t for s, t in zip(res.snapshots, res.snapshot_times))


def test_monotone_probe_all_builtin(const_env, periodic_env, checkerboard_env,
                                    fourier_env):
    params = SchemeParams(max_gradient_cap=3.0)
    for env in (const_env, periodic_env, checkerboard_env, fourier_env):
        rep = check_monotone(env, params, n_probes=10)
        assert rep.passed, rep.offending


def test_monotone_probe_llf_and_godunov(periodic_env):
    for scheme in ("godunov-1d", "local-lax-friedrichs"):
        rep = check_monotone(periodic_env,
                             SchemeParams(max_gradient_cap=3.0,
                                          num_hamiltonian=scheme), n_probes=10)
        assert rep.passed, (scheme, rep.offending)


def test_2d_diagonal_dominance_violation_rejected():
    spec = EnvironmentSpec(family="constant", gamma=3.0, growth_const=1.5,
                           dimension=2, sigma_shape=(1.0, 1.0))
    env = make_environment(spec)
    bad = np.array([[1.0, 1.5], [1.5, 1.0]])
    rep = check_monotone(env, SchemeParams(max_gradient_cap=2.0), A_matrix=bad)
    assert not rep.passed
    assert "weight" in rep.offending
    ok = np.array([[1.0, 0.5], [0.5, 1.0]])
    rep2 = check_monotone(env, SchemeParams(max_gradient_cap=2.0), A_matrix=ok)
    assert rep2.min_diffusion_weight >= 0.0


def test_stencil_weights_formula():
    w = diffusion_stencil_weights(np.array([[2.0, 1.0], [1.0, 3.0]]), (0.1, 0.1))
    assert w["axis0"] == pytest.approx((2.0 - 1.0) / 0.01)
    assert w["axis1"] == pytest.approx((3.0 - 1.0) / 0.01)
    assert w["corner"] == pytest.approx(1.0 / 0.02)


def test_2d_solve_smoke():
    spec = EnvironmentSpec(family="constant", gamma=3.0, growth_const=1.5,
                           dimension=2, sigma_shape=(0.5, 0.5))
    env = make_environment(spec)
    grid = GridSpec(dimension=2, extent=(4.0, 4.0), points=(24, 24))
    m = grid.mesh()
    u0 = GridFunction(grid, 0.3 * np.sin(2 * np.pi * m[0] / 4) * np.cos(2 * np.pi * m[1] / 4))
    res = solve_ivp(u0, env, 1.0, SchemeParams(max_gradient_cap=2.0), 0.05)
    assert np.all(np.isfinite(res.final.values))
    assert res.n_steps > 0
