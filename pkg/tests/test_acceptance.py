"""Acceptance suite: one test per criterion, each printing its pass line.

Run with  pytest tests/test_acceptance.py -v -s  to see the per-criterion
lines and timings.  Heavy artifacts (effective-Lagrangian tables, cell-problem
ladders) are session fixtures shared between criteria.  Tolerances are pinned
here, not tuned at runtime.
"""

import time

import numpy as np
import pytest

from hjhom import (ConvexTable, EnvironmentSpec, GridFunction, GridSpec,
                   SchemeParams, Seed, Vertex, check_monotone,
                   check_stationarity, check_subadditivity, classify_exposed,
                   compute_fundamental, estimate_holder, estimate_lagrangian,
                   growth_bound_fit, infsup_upper_bound, harmonic_ansatz,
                   legendre_transform, make_environment, plateau_check,
                   solve_cell_problem, solve_ivp, subdifferential,
                   verify_homogenization)
from hjhom.effective import EXPOSED, EXTREME_ONLY, FACE, biconjugate
from hjhom.environment import analytic_lagrangian
from hjhom.fundamental import scaled_bound_fit

GAMMA = 3.0
L_EXACT = analytic_lagrangian(GAMMA)

FAMILIES = {
    "constant": EnvironmentSpec(family="constant", gamma=GAMMA,
                                growth_const=1.5, sigma_shape=(0.0,)),
    "periodic": EnvironmentSpec(family="periodic", gamma=GAMMA,
                                growth_const=1.5, sigma_shape=(0.3,),
                                mod_amp_a=0.25, mod_amp_v=0.4,
                                period_or_cell=1.0),
    "random-checkerboard": EnvironmentSpec(family="random-checkerboard",
                                           gamma=GAMMA, growth_const=1.5,
                                           sigma_shape=(0.2,),
                                           period_or_cell=1.0,
                                           cells_per_period=16),
    "random-fourier": EnvironmentSpec(family="random-fourier", gamma=GAMMA,
                                      growth_const=1.3, sigma_shape=(0.15,),
                                      period_or_cell=0.5),
}


def _report(num, name, t0, detail=""):
    print(f"\n[acceptance] criterion {num} ({name}): PASS "
          f"[{time.time() - t0:.0f}s] {detail}")


# -- criterion 1: constant-coefficient oracle -------------------------------


@pytest.fixture(scope="session")
def const_lbar_tables():
    """Effective Lagrangian estimates for A = 0 and A = 0.1 Id."""
    v_grid = np.linspace(-3.0, 3.0, 61)
    spec0 = FAMILIES["constant"]
    est0 = estimate_lagrangian(spec0, [0], v_grid, [1.0, 2.0, 4.0, 8.0],
                               dx=0.04, steepness=4.0)
    specA = EnvironmentSpec(family="constant", gamma=GAMMA, growth_const=1.5,
                            sigma_shape=(np.sqrt(0.1),))
    estA = estimate_lagrangian(specA, [0], v_grid, [2.0, 4.0, 8.0, 16.0],
                               dx=0.04, steepness=4.0)
    return {"inviscid": est0, "viscous": estA, "v_grid": v_grid}


def test_criterion_1_constant_coefficient_oracle(const_lbar_tables):
    """Lbar matches 2*3^(-3/2)|v|^(3/2) within 5%; Hbar round-trips to |p|^3."""
    t0 = time.time()
    v_grid = const_lbar_tables["v_grid"]
    mask = np.abs(v_grid) <= 2.0
    scale = np.abs(L_EXACT(v_grid))[mask].max()
    rel = {}
    for label in ("inviscid", "viscous"):
        est = const_lbar_tables[label]
        assert est.converged, f"{label}: Cauchy ladder not converged"
        err = np.abs(est.table.values - L_EXACT(v_grid))[mask].max()
        rel[label] = err / scale
        assert rel[label] <= 0.05, f"{label}: Lbar error {rel[label]:.3%} > 5%"
        # Hbar round-trip on trusted momenta
        p_grid = np.linspace(-1.0, 1.0, 41)
        H = legendre_transform(est.table, p_grid)
        tr = H.trusted
        assert tr.sum() >= 20
        h_err = np.abs(H.values - np.abs(p_grid) ** GAMMA)[tr].max()
        h_scale = np.abs(p_grid[tr]).max() ** GAMMA
        assert h_err <= 0.05 * h_scale, f"{label}: Hbar round-trip {h_err / h_scale:.3%} > 5%"
        rel[label + "_H"] = h_err / h_scale
    _report(1, "constant-coefficient oracle", t0,
            f"Lbar rel err: inviscid {rel['inviscid']:.2%}, viscous {rel['viscous']:.2%}; "
            f"Hbar: {rel['inviscid_H']:.2%} / {rel['viscous_H']:.2%}")


# -- criteria 2-4: fundamental-solution structural laws ---------------------


@pytest.fixture(scope="session")
def family_tables():
    """Base + intermediate vertex tables per family, plus a refined base."""
    grid = GridSpec(dimension=1, extent=(10.0,), points=(401,),
                    boundary="linear-extrapolation")
    grid_fine = GridSpec(dimension=1, extent=(10.0,), points=(801,),
                         boundary="linear-extrapolation")
    out = {}
    for name, spec in FAMILIES.items():
        env = make_environment(spec, Seed(7))
        base = compute_fundamental(env, Vertex((0.0,), 0.0), 1.2, grid,
                                   steepness=4.0, certify=False)
        base_fine = compute_fundamental(env, Vertex((0.0,), 0.0), 1.2, grid_fine,
                                        steepness=4.0, certify=False)
        mids = [compute_fundamental(env, Vertex((y,), s), 1.2, grid,
                                    steepness=4.0, certify=False)
                for (y, s) in ((0.3, 0.4), (-0.5, 0.2), (0.1, 0.6))]
        out[name] = {"env": env, "base": base, "fine": base_fine, "mids": mids,
                     "grid": grid}
    return out


def test_criterion_2_subadditivity(family_tables):
    """Chain inequality violation <= 3x measured self-convergence error."""
    t0 = time.time()
    rng = np.random.default_rng(12)
    details = []
    for name, pack in family_tables.items():
        base, fine = pack["base"], pack["fine"]
        # solver self-convergence at this resolution, on the probe region
        probe_x = np.abs(fine.grid.mesh()[0]) <= 2.0
        sc = 0.0
        for t in (0.6, 0.9, 1.2):
            c = base.at(fine.grid.mesh()[0:1, probe_x], t)
            f = fine.at(fine.grid.mesh()[0:1, probe_x], t)
            sc = max(sc, float(np.max(np.abs(c - f))))
        tol = 3.0 * sc
        worst = -np.inf
        count = 0
        for mid in pack["mids"]:
            r = mid.vertex.s
            probes = []
            for _ in range(17):
                probes.append((np.array([rng.uniform(-1.8, 1.8)]),
                               rng.uniform(r + 0.15, 1.2)))
            viol, vmax = check_subadditivity(base, mid, probes)
            worst = max(worst, vmax)
            count += len(probes)
        assert count >= 50
        assert worst <= tol, (f"{name}: violation {worst:.2e} exceeds "
                              f"3x self-convergence {tol:.2e}")
        details.append(f"{name}: {worst:+.1e} <= {tol:.1e}")
    _report(2, "subadditivity suite", t0, "; ".join(details))


def test_criterion_3_stationarity(family_tables):
    """Vertex shift equals environment translation to 1e-12, all families."""
    t0 = time.time()
    grid = GridSpec(dimension=1, extent=(6.0,), points=(241,),
                    boundary="linear-extrapolation")
    shifts = {"constant": (0.5, 0.25), "periodic": (1.0, 1.0),
              "random-checkerboard": (1.0, 1.0), "random-fourier": (0.5, 0.5)}
    worst = 0.0
    for name, spec in FAMILIES.items():
        env = make_environment(spec, Seed(3))
        disc = check_stationarity(env, Vertex((0.0,), 0.0), shifts[name],
                                  grid, 0.8, steepness=3.0)
        worst = max(worst, disc)
        assert disc <= 1e-12, f"{name}: stationarity discrepancy {disc:.2e}"
    _report(3, "stationarity suite", t0, f"max discrepancy {worst:.1e}")


def test_criterion_4_growth_bounds(family_tables, holder_tables):
    """Lemma-type sandwich constants stable x2 under refinement and across eps."""
    t0 = time.time()
    details = []
    for name, pack in family_tables.items():
        c_coarse = growth_bound_fit(pack["base"], GAMMA)
        c_fine = growth_bound_fit(pack["fine"], GAMMA)
        assert c_coarse <= 2.0 * c_fine and c_fine <= 2.0 * c_coarse, (
            f"{name}: fitted constants {c_coarse:.3f} vs {c_fine:.3f} move >x2")
        details.append(f"{name}: C = {c_fine:.3f}")
    # scaled bound across eps in {1, 1/2, 1/4} on the fourier family
    cs = [scaled_bound_fit(holder_tables[e], GAMMA, (1.0, 0.1))
          for e in (1.0, 0.5, 0.25)]
    assert max(cs) <= 2.0 * min(cs), f"scaled constants {cs} move >x2"
    _report(4, "growth-bound suite", t0,
            "; ".join(details) + f"; scaled C: {[round(c, 3) for c in cs]}")


@pytest.fixture(scope="session")
def holder_tables():
    """Scaled fundamental tables for the random-fourier family."""
    env = make_environment(FAMILIES["random-fourier"], Seed(3))
    tables = {}
    for eps in (1.0, 0.5, 0.25, 0.125):
        dx = min(0.04, eps * 0.5 / 12)
        npts = int(10.0 / dx) + 1
        g = GridSpec(dimension=1, extent=(10.0,), points=(npts,),
                     boundary="linear-extrapolation")
        tables[eps] = compute_fundamental(env, Vertex((0.0,), 0.0), 1.0, g,
                                          steepness=4.0, epsilon_scaling=eps,
                                          certify=False)
    return tables


def test_criterion_5_holder_uniformity(holder_tables):
    """Fitted Hoelder constants vary <= x2 across eps in {1,1/2,1/4,1/8}."""
    t0 = time.time()
    rep = estimate_holder(holder_tables, window=(1.0, 0.1))
    assert rep.uniform
    assert max(rep.constants) <= 2.0 * min(rep.constants), rep.constants
    _report(5, "Hoelder uniformity", t0,
            f"alpha ~ {rep.alpha_pooled:.2f}, constants "
            f"{[round(c, 2) for c in rep.constants]}")


# -- criterion 6: route agreement (cell vs Legendre) ------------------------


P_ROUTE = (-2.0, -1.0, 0.0, 1.0, 2.0)
EPS_CELL = (0.25, 0.125, 0.0625)


@pytest.fixture(scope="session")
def route_periodic():
    """Legendre-route Hbar and cell-problem ladders on the periodic env."""
    spec = FAMILIES["periodic"]
    v_grid = np.linspace(-14.0, 14.0, 113)
    est = estimate_lagrangian(spec, [0], v_grid, [2.0, 4.0, 8.0], dx=0.04,
                              steepness=4.0)
    hbar = legendre_transform(est.table, np.array(P_ROUTE))
    cells = {}
    for p in P_ROUTE:
        cells[p] = [solve_cell_problem(spec, 0, p, e, dx=1 / 16,
                                       gradient_cap=3.5)
                    for e in EPS_CELL]
    return {"est": est, "hbar": hbar, "cells": cells}


def test_criterion_6_route_agreement(route_periodic):
    """|H_cell - H_Legendre| <= 0.1 (1 + |H|); plateau strictly decreases."""
    t0 = time.time()
    hbar = route_periodic["hbar"]
    assert hbar.trusted.all(), "Legendre route saturated; enlarge the v grid"
    gaps = []
    for i, p in enumerate(P_ROUTE):
        h_leg = float(hbar.values[i])
        sols = route_periodic["cells"][p]
        h_cell, unc = sols[-1].hamiltonian_estimate()
        gap = abs(h_cell - h_leg)
        tol = 0.1 * (1.0 + abs(h_leg))
        assert gap <= tol, f"p={p}: |{h_cell:.4f} - {h_leg:.4f}| > {tol:.3f}"
        gaps.append(gap)
        rep = plateau_check(sols, h_cell)
        assert rep.decreasing, (f"p={p}: plateau statistics {rep.statistics} "
                                "not strictly decreasing")
    _report(6, "route agreement", t0,
            f"max |H_cell - H_Leg| = {max(gaps):.3f}; plateau ladders decrease")


# -- criterion 7: homogenization limit ---------------------------------------


@pytest.fixture(scope="session")
def verify_envs():
    out = {}
    for name, spec in (("periodic",
                        EnvironmentSpec(family="periodic", gamma=GAMMA,
                                        growth_const=2.0, sigma_shape=(0.3,),
                                        mod_amp_a=0.3, mod_amp_v=0.6,
                                        period_or_cell=1.0)),
                       ("random-checkerboard",
                        EnvironmentSpec(family="random-checkerboard",
                                        gamma=GAMMA, growth_const=2.0,
                                        sigma_shape=(0.2,), period_or_cell=1.0,
                                        cells_per_period=64))):
        v_grid = np.linspace(-2.5, 2.5, 51)
        est = estimate_lagrangian(spec, [1, 2, 3], v_grid,
                                  [4.0, 8.0, 16.0, 32.0], dx=0.04,
                                  steepness=3.0, threads=2)
        out[name] = (spec, est)
    return out


def test_criterion_7_homogenization_limit(verify_envs):
    """Window error decreases (ratio <= 0.8 per halving, 3 seeds) both envs."""
    t0 = time.time()
    details = []
    for name, (spec, est) in verify_envs.items():
        assert est.converged
        for profile, kw in (("cone", {}), ("affine", {"slope": 0.75})):
            conv = verify_homogenization(spec, [1, 2, 3], profile, est.table,
                                         [0.25, 0.125, 0.0625],
                                         window_radius=1.0, horizon=0.5,
                                         ratio_bound=0.8, threads=2,
                                         profile_kwargs=kw)
            assert conv.monotone, (f"{name}/{profile}: errors {conv.errors}, "
                                   f"ratios {conv.ratios} exceed 0.8")
            assert conv.meta["padding_gap"] <= 1e-6
            details.append(f"{name}/{profile}: "
                           + "->".join(f"{e:.4f}" for e in conv.errors))
    _report(7, "homogenization limit", t0, "; ".join(details))


# -- criterion 8: duality identity -------------------------------------------


def test_criterion_8_duality_identity(const_lbar_tables):
    """p in subdiff Lbar(q) gives |Hbar(p) + Lbar(q) - p q| <= 2 x resolution."""
    t0 = time.time()
    table = const_lbar_tables["inviscid"].table
    v = table.axes[0]
    dv = v[1] - v[0]
    # slope resolution: largest one-sided slope gap across the grid
    slopes = np.diff(table.values) / dv
    resolution = float(np.max(np.abs(np.diff(slopes)))) + 1e-15
    rng = np.random.default_rng(4)
    worst = 0.0
    for q in rng.choice(v[3:-3], 20, replace=False):
        lo, hi = subdifferential(table, float(q))
        for p in (lo, hi, 0.5 * (lo + hi)):
            gap = abs(float(table.conjugate_at(p)) + float(table.interp(q))
                      - p * q)
            worst = max(worst, gap)
            assert gap <= 2.0 * resolution, (q, p, gap, resolution)
    _report(8, "duality identity", t0,
            f"max defect {worst:.2e} <= 2 x slope resolution {resolution:.2e}")


# -- criterion 9: convex-analysis core ---------------------------------------


def test_criterion_9_convex_core():
    """Biconjugate exact to 1e-12; monotone conjugation; classification."""
    t0 = time.time()
    rng = np.random.default_rng(0)
    v = np.linspace(-2, 2, 81)
    # biconjugate idempotence on noisy tables
    for _ in range(5):
        raw = 0.4 * v ** 2 + 0.3 * np.sin(rng.uniform(1, 3) * v) \
            + rng.uniform(-0.05, 0.05, v.size)
        tab = ConvexTable.from_raw((v,), raw)
        assert np.max(np.abs(biconjugate(tab) - tab.values)) <= 1e-12
    # conjugation monotonicity on 10 random pairs
    p = np.linspace(-1.5, 1.5, 41)
    for _ in range(10):
        f1 = 0.5 * v ** 2 + 0.2 * np.sin(rng.uniform(1, 3) * v)
        f2 = f1 + rng.uniform(0.0, 0.4) + rng.uniform(0.0, 0.2) * np.cos(v)
        H1 = legendre_transform(ConvexTable.from_raw((v,), f1), p).values
        H2 = legendre_transform(ConvexTable.from_raw((v,), f2), p).values
        assert np.min(H1 - H2) >= -1e-12
    # classification on three hand-checkable piecewise-linear tables
    g = np.linspace(-2, 2, 17)
    quad = ConvexTable.from_raw((g,), g ** 2)
    labels = classify_exposed(quad)
    assert set(labels[1:-1]) == {EXPOSED}
    flat = ConvexTable.from_raw((g,), np.maximum(np.abs(g) - 1.0, 0.0))
    labels = classify_exposed(flat)
    i0, i1 = 4, 12  # nodes at -1 and +1
    assert labels[i0] == EXPOSED and labels[i1] == EXPOSED
    assert set(labels[i0 + 1:i1]) == {FACE}
    vee = ConvexTable.from_raw((g,), np.abs(g))
    labels = classify_exposed(vee)
    assert labels[8] == EXPOSED  # kink at 0
    assert set(labels[1:8]) == {FACE} and set(labels[9:-1]) == {FACE}
    assert labels[0] == EXTREME_ONLY and labels[-1] == EXTREME_ONLY
    _report(9, "convex-analysis core", t0)


# -- criterion 10: inf-sup upper bound ---------------------------------------


def test_criterion_10_infsup_bound(route_periodic):
    """bounds(p) + slack >= both Hbar routes; psi=0 equals grid-sup exactly."""
    t0 = time.time()
    env = make_environment(FAMILIES["periodic"], Seed(0))
    hbar = route_periodic["hbar"]
    ansatz = harmonic_ansatz(1, 1.0, max_mode=1)
    details = []
    for i, p in enumerate(P_ROUTE):
        b = infsup_upper_bound(env, p, ansatz, budget=350, n_grid=24)
        slack = max(b.refine_history) - min(b.refine_history)
        h_leg = float(hbar.values[i])
        h_cell, unc = route_periodic["cells"][p][-1].hamiltonian_estimate()
        floor = max(h_leg, h_cell)
        # combined tolerance: route uncertainty + grid-sup slack
        tol = 0.1 * (1.0 + abs(floor)) + slack + unc
        assert b.value >= floor - tol, (p, b.value, floor, tol)
        # psi = 0 fallback equals the grid sup of H(p, x, t) exactly
        x, t = _period_box(env, b.grid_points)
        sup_H = float(np.max(env.eval_H(np.full((1,) + t.shape, p), x, t)))
        b0 = infsup_upper_bound(env, p, ansatz, budget=0, n_grid=b.grid_points,
                                refines=0)
        assert b0.psi0_value == sup_H
        details.append(f"p={p:+.0f}: {b.value:.3f} >= {floor:.3f}")
    _report(10, "inf-sup bound validity", t0, "; ".join(details))


def _period_box(env, n_grid):
    L = env.spec.period_or_cell
    axes = [np.linspace(0.0, L, n_grid, endpoint=False) for _ in range(2)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh[:-1]), mesh[-1]


# -- criterion 11: scheme soundness -------------------------------------------


def test_criterion_11_scheme_soundness():
    """Comparison on random pairs per family; monotone probes; 2D rejection."""
    t0 = time.time()
    rng = np.random.default_rng(21)
    grid = GridSpec(dimension=1, extent=(4.0,), points=(96,))
    x = grid.mesh()[0]
    params = SchemeParams(max_gradient_cap=4.0)
    for name, spec in FAMILIES.items():
        env = make_environment(spec, Seed(5))
        for _ in range(3):
            a1, a2, ph = rng.uniform(0.1, 0.4, 3)
            base = a1 * np.sin(2 * np.pi * x / 4 + ph) + a2 * np.cos(np.pi * x)
            bump = rng.uniform(0.05, 0.3) * (1 + np.sin(2 * np.pi * x / 4 - ph))
            lo = solve_ivp(GridFunction(grid, base), env, 1.0, params, 0.25)
            hi = solve_ivp(GridFunction(grid, base + bump), env, 1.0, params, 0.25)
            assert np.max(lo.final.values - hi.final.values) <= 1e-12, name
        rep = check_monotone(env, params, n_probes=8)
        assert rep.passed, (name, rep.offending)
    # deliberate diagonal-dominance violation in 2D is rejected
    spec2 = EnvironmentSpec(family="constant", gamma=GAMMA, growth_const=1.5,
                            dimension=2, sigma_shape=(1.0, 1.0))
    env2 = make_environment(spec2)
    bad = check_monotone(env2, SchemeParams(max_gradient_cap=2.0),
                         A_matrix=np.array([[1.0, 1.4], [1.4, 1.0]]))
    assert not bad.passed and "weight" in bad.offending
    _report(11, "scheme soundness", t0)
