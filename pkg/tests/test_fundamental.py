import numpy as np
import pytest

from hjhom import (GridSpec, SolverError, Vertex, compute_fundamental,
                   check_stationarity, check_subadditivity, estimate_holder,
                   growth_bound_fit)
from hjhom.fundamental import cone_datum, scaled_bound_fit

#: frozen Hopf-Lax oracle value: L(1,1,0,0) for H = |p|^3 is 2 * 3^(-3/2)
L_1100 = 0.3849001794597505


@pytest.fixture(scope="module")
def const_table(const_env):
    grid = GridSpec(dimension=1, extent=(12.0,), points=(1201,),
                    boundary="linear-extrapolation")
    return compute_fundamental(const_env, Vertex((0.0,), 0.0), 1.5, grid,
                               steepness=4.0, certify=False)


def test_fundamental_matches_hopf_lax_oracle(const_table):
    val = float(const_table.at(np.array([1.0]), 1.0))
    assert val == pytest.approx(L_1100, abs=0.02)


def test_fundamental_zero_ray(const_table):
    # L(0, t, 0, 0) = t * min L = 0 for H = |p|^3
    for t in (0.5, 1.0, 1.5):
        assert abs(float(const_table.at(np.array([0.0]), t))) < 5e-3


def test_unrelaxed_far_field_grows_like_cone(const_table):
    # far outside the propagation cone the profile still grows like M|x - y|:
    # the value is M|x| minus the uniform drift t H(M) of the steep flanks
    t_small = const_table.times[1]
    far1 = float(const_table.at(np.array([5.0]), t_small))
    far2 = float(const_table.at(np.array([5.5]), t_small))
    slope = (far2 - far1) / 0.5
    assert slope == pytest.approx(4.0, rel=0.02)
    assert far2 == pytest.approx(4.0 * 5.5 - t_small * 4.0 ** 3, abs=0.1)


def test_cone_datum_shape(const_env):
    # 81 points over extent 8 puts a node exactly at the vertex x = 1
    grid = GridSpec(dimension=1, extent=(8.0,), points=(81,),
                    boundary="linear-extrapolation")
    u0 = cone_datum(grid, Vertex((1.0,), 0.0), 3.0)
    x = grid.axes()[0]
    assert float(u0.values[np.argmin(np.abs(x - 1.0))]) == pytest.approx(0.0, abs=1e-9)
    assert u0.values.max() <= 3.0 * 0.5 * 8.0 * 1.5 + 1e-9


def test_steepness_certification_accepts(const_env):
    grid = GridSpec(dimension=1, extent=(8.0,), points=(801,),
                    boundary="linear-extrapolation")
    tab = compute_fundamental(const_env, Vertex((0.0,), 0.0), 1.0, grid,
                              steepness=4.0, certify=True,
                              certify_window=(0.8, 0.1))
    assert tab.certified
    assert tab.certify_gap <= 1e-3 * 1.0


def test_steepness_certification_rejects_shallow(const_env):
    # a cone too shallow for the window slopes must be caught
    grid = GridSpec(dimension=1, extent=(8.0,), points=(401,),
                    boundary="linear-extrapolation")
    with pytest.raises(SolverError, match="steepness"):
        compute_fundamental(const_env, Vertex((0.0,), 0.0), 1.0, grid,
                            steepness=0.5, certify=True,
                            certify_window=(3.0, 0.05))


def test_subadditivity_degenerate_chain(const_table):
    viol, vmax = check_subadditivity(const_table, const_table,
                                     [(np.array([0.8]), 1.2)])
    # (z, r) = (y, s): violation reduces to L(y, s+, y, s) >= ~0
    assert vmax <= 5e-3


def test_subadditivity_constant_env(const_env, const_table):
    grid = const_table.grid
    tab2 = compute_fundamental(const_env, Vertex((0.4,), 0.3), 1.5, grid,
                               steepness=4.0, certify=False)
    probes = [(np.array([xx]), tt) for xx, tt in
              [(0.8, 1.0), (1.2, 1.4), (-0.5, 0.9), (0.4, 1.45), (0.0, 1.2)]]
    viol, vmax = check_subadditivity(const_table, tab2, probes)
    assert vmax <= 1e-3
    # along the optimal straight ray through (z, r) the chain is near-tight
    v_ray = 0.4 / 0.3
    x_ray = np.array([v_ray * 1.2])
    viol_ray, _ = check_subadditivity(const_table, tab2, [(x_ray, 1.2)])
    assert abs(viol_ray[0]) < 0.05


def test_subadditivity_random_probes(fourier_env):
    grid = GridSpec(dimension=1, extent=(10.0,), points=(501,),
                    boundary="linear-extrapolation")
    base = compute_fundamental(fourier_env, Vertex((0.0,), 0.0), 1.2, grid,
                               steepness=4.0, certify=False)
    mid = compute_fundamental(fourier_env, Vertex((0.3,), 0.4), 1.2, grid,
                              steepness=4.0, certify=False)
    rng = np.random.default_rng(0)
    probes = [(np.array([rng.uniform(-1.5, 1.5)]), rng.uniform(0.5, 1.15))
              for _ in range(20)]
    viol, vmax = check_subadditivity(base, mid, probes)
    # solver tolerance scale at this resolution
    assert vmax <= 0.02


def test_subadditivity_vertex_order_enforced(const_table):
    with pytest.raises(ValueError):
        check_subadditivity(const_table, const_table, [(np.array([0.0]), -0.1)])


def test_stationarity_exact_all_families(const_env, periodic_env,
                                         checkerboard_env, fourier_env):
    grid = GridSpec(dimension=1, extent=(6.0,), points=(241,),
                    boundary="linear-extrapolation")
    cases = [(const_env, (0.5, 0.25)),
             (periodic_env, (1.0, 1.0)),
             (checkerboard_env, (1.0, 1.0)),   # one full cell
             (fourier_env, (0.5, 0.5))]
    for env, shift in cases:
        disc = check_stationarity(env, Vertex((0.0,), 0.0), shift, grid, 0.8,
                                  steepness=3.0)
        assert disc <= 1e-12, (env.spec.family, disc)


def test_growth_bound_fit_stable_under_refinement(const_env):
    cs = []
    for pts in (601, 1201):
        grid = GridSpec(dimension=1, extent=(12.0,), points=(pts,),
                        boundary="linear-extrapolation")
        tab = compute_fundamental(const_env, Vertex((0.0,), 0.0), 1.5, grid,
                                  steepness=4.0, certify=False)
        cs.append(growth_bound_fit(tab, 3.0))
    assert cs[0] <= 2.0 * cs[1] and cs[1] <= 2.0 * cs[0]


def test_growth_bound_sandwich_nodewise(const_table):
    # verify that the fitted constant indeed closes the sandwich
    C = growth_bound_fit(const_table, 3.0)
    gp = 1.5
    x = const_table.grid.mesh()[0]
    for k, t in enumerate(const_table.times):
        if t <= 0:
            continue
        vals = const_table.values[k]
        relaxed = vals < 0.99 * const_table.steepness * np.abs(x) + 1e-9
        bracket = np.abs(x) ** gp / t ** (gp - 1) + t ** (1 - gp / 2) + t
        assert np.all(vals[relaxed] <= C * bracket[relaxed] + 1e-9)
        assert np.all(vals[relaxed] >= -C * t - 1e-9)


@pytest.fixture(scope="module")
def scaled_tables(fourier_env):
    tables = {}
    for eps in (1.0, 0.5, 0.25):
        dx = min(0.04, eps * 0.5 / 12)
        npts = int(10.0 / dx) + 1
        g = GridSpec(dimension=1, extent=(10.0,), points=(npts,),
                     boundary="linear-extrapolation")
        tables[eps] = compute_fundamental(fourier_env, Vertex((0.0,), 0.0), 1.0,
                                          g, steepness=4.0, epsilon_scaling=eps,
                                          certify=False)
    return tables


def test_scaled_bound_uniform_in_eps(scaled_tables):
    cs = [scaled_bound_fit(t, 3.0, (1.0, 0.1)) for t in scaled_tables.values()]
    assert max(cs) <= 2.0 * min(cs)


def test_holder_constants_uniform(scaled_tables):
    rep = estimate_holder(scaled_tables, window=(1.0, 0.1))
    assert rep.uniform
    assert max(rep.constants) <= 2.0 * min(rep.constants)
    # fitted exponents agree across eps within +-0.15 of their median
    med = np.median(rep.alpha_per_eps)
    assert all(abs(a - med) <= 0.15 for a in rep.alpha_per_eps)


def test_holder_constant_env_scaling_identity(const_env):
    # for constant coefficients the scaled tables coincide (t L(x/t) at all eps)
    tables = {}
    for eps in (1.0, 0.5):
        g = GridSpec(dimension=1, extent=(8.0,), points=(401,),
                     boundary="linear-extrapolation")
        tables[eps] = compute_fundamental(const_env, Vertex((0.0,), 0.0), 1.0,
                                          g, steepness=3.0, epsilon_scaling=eps,
                                          certify=False)
    gap = np.max(np.abs(tables[1.0].values - tables[0.5].values))
    assert gap < 1e-12


def test_holder_degenerate_window_rejected(scaled_tables):
    with pytest.raises(ValueError):
        estimate_holder(scaled_tables, window=(0.1, 0.1))
