"""Approximate cell problem and the plateau test for the effective Hamiltonian.

The damped stationary equation

    eps * w + w_t - tr(A(x,t) D^2 w) + H(p + Dw, x, t) = 0   on R^n x R

is solved by relaxation: march the damped evolution forward (both the eps-
damping and the diffusion are contractive in forward time) from w = 0 until
the change of eps*w over one heterogeneity cycle stalls below tolerance, then
record eps*w over a window of length ~ 2R/eps.  The homogenization statement
under test is that eps * w^eps tends to the constant -Hbar(p) uniformly on
space-time cylinders of radius R/eps.

The solver is reused verbatim through a shifted-momentum environment wrapper;
the relaxation domain is made exactly periodic (the random families are
re-synthesized with their big period equal to the domain) so periodic
boundaries introduce no seam.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .environment import make_environment, Seed
from .solver import GridFunction, GridSpec, SchemeParams, SolverError, solve_ivp


class ShiftedMomentumEnv:
    """Environment wrapper evaluating H at p0 + q; satisfies the solver protocol."""

    def __init__(self, base, p0):
        self.base = base
        self.p0 = np.atleast_1d(np.asarray(p0, dtype=float))
        if len(self.p0) != base.dimension:
            raise ValueError("momentum offset must match the dimension")

    @property
    def dimension(self):
        return self.base.dimension

    def _off(self, q):
        return q + self.p0.reshape((-1,) + (1,) * (np.ndim(q) - 1))

    def eval_H(self, q, x, t):
        return self.base.eval_H(self._off(np.asarray(q, dtype=float)), x, t)

    def eval_H_multi(self, qs, x, t):
        return self.base.eval_H_multi([self._off(np.asarray(q, dtype=float)) for q in qs], x, t)

    def eval_A_diag(self, x, t):
        return self.base.eval_A_diag(x, t)

    def eval_sigma(self, x, t):
        return self.base.eval_sigma(x, t)

    def dHdp_bound(self, qmax):
        return self.base.dHdp_bound(float(np.linalg.norm(self.p0)) + qmax)

    @property
    def a_max(self):
        return self.base.a_max

    @property
    def max_abs_H0(self):
        # sup |H(p0, x, t)| from the analytic coefficient bounds
        a_hi = self.base.a_range[1]
        g = self.base.spec.gamma
        return a_hi * float(np.linalg.norm(self.p0)) ** g + self.base.v_bound

    @property
    def p_argmin(self):
        return -float(self.p0[0])

    @property
    def period_hint(self):
        return self.base.period_hint

    def translated(self, offset):
        return ShiftedMomentumEnv(self.base.translated(offset), self.p0)


def domain_periodic_spec(spec, domain):
    """Re-synthesize a random family so its big period equals the domain length.

    Periodic and constant families are returned unchanged (the caller rounds
    the domain to whole periods); the checkerboard and fourier families get
    cells_per_period / period_factor matched to the domain so that periodic
    boundaries close the field without a seam.
    """
    cells = max(2, int(round(domain / spec.period_or_cell)))
    if spec.family == "random-checkerboard":
        return dataclasses.replace(spec, cells_per_period=cells)
    if spec.family == "random-fourier":
        return dataclasses.replace(spec, period_factor=cells)
    return spec


@dataclass
class CellSolution:
    """Relaxed cell-problem solution with the recorded eps*w window."""

    p: float
    epsilon: float
    grid: GridSpec
    eps_w: np.ndarray            # shape (n_record, *grid.points)
    record_times: np.ndarray
    w_final: GridFunction
    decay_log: list
    relax_time: float
    meta: dict = field(default_factory=dict)

    def plateau_statistic(self, hbar_p):
        """sup over the recorded window of |eps w + Hbar(p)|."""
        return float(np.max(np.abs(self.eps_w + hbar_p)))

    def hamiltonian_estimate(self):
        """Midrange estimate of -eps w, with half-spread as uncertainty."""
        hi = float(np.max(self.eps_w))
        lo = float(np.min(self.eps_w))
        return -0.5 * (hi + lo), 0.5 * (hi - lo)


def solve_cell_problem(env_spec, rng_seed, p, epsilon, *, dx, params=None,
                       gradient_cap=4.0, domain_extent=None, relax_time=None,
                       record_span=None, n_record=17, tol_fix=2e-4,
                       max_extra_cycles=400, window_radius=1.0):
    """Relax the approximate cell problem to its damped steady state.

    The domain has physical size 2 * window_radius / epsilon per axis (capped
    at 64 heterogeneity periods to bound memory; the cap is recorded in meta),
    rounded to whole heterogeneity periods and closed periodically.  The
    relaxation marches at least max(relax_time, 5/epsilon), then continues
    cycle by cycle until the change of eps*w over one cycle falls below
    tol_fix * (1 + |eps w|), raising with the decay log if the change stalls
    without contracting.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    spec = env_spec
    cell = spec.period_or_cell
    if domain_extent is None:
        domain_extent = 2.0 * window_radius / epsilon
    n_periods = int(np.ceil(domain_extent / cell - 1e-9))
    capped = False
    if n_periods > 64:
        n_periods = 64
        capped = True
    n_periods = max(n_periods, 2)
    domain = n_periods * cell
    spec = domain_periodic_spec(spec, domain)
    env0 = make_environment(spec, Seed(rng_seed))
    env = ShiftedMomentumEnv(env0, [p] + [0.0] * (spec.dimension - 1))

    if spec.dimension != 1:
        raise NotImplementedError("cell relaxation is implemented in 1D")
    npts = max(8, int(round(domain / dx)))
    grid = GridSpec(dimension=1, extent=(domain,), points=(npts,),
                    origin=(-domain / 2.0,), boundary="periodic")
    if params is None:
        params = SchemeParams(max_gradient_cap=gradient_cap)
    elif params.max_gradient_cap is None:
        params = dataclasses.replace(params, max_gradient_cap=gradient_cap)

    relax_min = 5.0 / epsilon
    relax_time = max(relax_time or 6.0 / epsilon, relax_min)
    cycle = max(cell, dx * 4)

    u = GridFunction(grid, np.zeros(grid.points), 0.0)
    decay = []
    # initial mandatory relaxation
    res = solve_ivp(u, env, 1.0, params, relax_time, damping=epsilon,
                    stability_check=False)
    u = res.final
    prev = u.values.copy()
    t_now = relax_time
    converged = False
    for k in range(max_extra_cycles):
        res = solve_ivp(u, env, 1.0, params, t_now + cycle, damping=epsilon,
                        stability_check=False)
        u = res.final
        t_now += cycle
        delta = epsilon * float(np.max(np.abs(u.values - prev)))
        scale = 1.0 + epsilon * float(np.max(np.abs(u.values)))
        decay.append(delta)
        prev = u.values.copy()
        if delta <= tol_fix * scale:
            converged = True
            break
        if k >= 8 and decay[-1] > 0.95 * decay[-5]:
            raise SolverError(
                "cell relaxation is not contracting; decay log: "
                + ", ".join(f"{d:.2e}" for d in decay[-8:])
            )
    if not converged:
        raise SolverError(
            f"cell relaxation missed tolerance {tol_fix:.1e} after "
            f"{max_extra_cycles} extra cycles; decay log tail: "
            + ", ".join(f"{d:.2e}" for d in decay[-5:])
        )

    if record_span is None:
        record_span = 2.0 * window_radius / epsilon
    rec_times = np.linspace(t_now, t_now + record_span, n_record)
    res = solve_ivp(u, env, 1.0, params, rec_times[-1],
                    snapshot_times=rec_times[1:], damping=epsilon,
                    stability_check=False)
    snaps = [u.values] + [s.values for s in res.snapshots]
    eps_w = epsilon * np.stack(snaps)
    return CellSolution(p=p, epsilon=epsilon, grid=grid, eps_w=eps_w,
                        record_times=rec_times, w_final=res.final,
                        decay_log=decay, relax_time=t_now,
                        meta={"domain": domain, "domain_capped": capped,
                              "cells": n_periods, "dx": dx,
                              "rng_seed": rng_seed})


def cell_hamiltonian(env_spec, rng_seed, p, epsilon, *, dx, **kw):
    """Effective Hamiltonian estimate -eps w at one (p, eps); returns (value, unc)."""
    sol = solve_cell_problem(env_spec, rng_seed, p, epsilon, dx=dx, **kw)
    return sol.hamiltonian_estimate()


@dataclass
class PlateauReport:
    """Plateau statistics sup |eps w + Hbar(p)| across an epsilon ladder."""

    p: float
    eps: list
    statistics: list
    decreasing: bool
    hbar_p: float

    def to_dict(self):
        return {"p": self.p, "eps": list(self.eps),
                "statistics": list(self.statistics),
                "decreasing": bool(self.decreasing), "hbar_p": self.hbar_p}


def plateau_check(solutions, hbar, p=None):
    """Evaluate the plateau statistic across an epsilon ladder.

    hbar may be a float or a ConvexTable; in the latter case p must be given
    and is refused when it falls in an untrusted (boundary-saturated) region of
    the table, since the statistic would then calibrate against a truncation
    artifact.
    """
    if hasattr(hbar, "axes"):
        if p is None:
            raise ValueError("p is required when hbar is a table")
        ax = hbar.axes[0]
        i = int(np.argmin(np.abs(ax - p)))
        if abs(ax[i] - p) > 1e-9 * (1 + abs(p)):
            raise ValueError(f"p = {p} is not on the table grid")
        if not hbar.trusted[i]:
            raise ValueError(
                f"Hbar({p}) is boundary-saturated (untrusted); enlarge the "
                "velocity grid of the Lagrangian estimate"
            )
        hbar_p = float(hbar.values[i])
    else:
        hbar_p = float(hbar)
        p = solutions[0].p if p is None else p
    sols = sorted(solutions, key=lambda s: -s.epsilon)
    eps = [s.epsilon for s in sols]
    stats = [s.plateau_statistic(hbar_p) for s in sols]
    decreasing = all(stats[k + 1] < stats[k] for k in range(len(stats) - 1))
    return PlateauReport(p=float(p), eps=eps, statistics=stats,
                         decreasing=decreasing, hbar_p=hbar_p)
