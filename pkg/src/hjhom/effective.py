"""Effective Lagrangian estimation and discrete Legendre-Fenchel duality.

The effective Lagrangian is the long-time average of the fundamental solution,

    Lbar(v) = lim_rho  L(rho v, rho, 0, 0, omega) / rho,

estimated here at the top of a dyadic rho ladder with a Cauchy diagnostic and
averaged over independent seeds (the finite surrogate for the almost-sure
deterministic limit).  The effective Hamiltonian is the convex conjugate

    Hbar(p) = sup_v ( p . v - Lbar(v) ),

computed on tables by the monotone-slope sweep over the lower convex hull,
which is linear-time and exact; in two dimensions the conjugate factorizes
into per-axis sweeps.  Raw estimates are convexified before conjugation and
the raw-vs-convexified gap is kept as a discretization diagnostic.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .environment import make_environment, Seed
from .fundamental import Vertex, compute_fundamental
from .solver import GridSpec


# -- convex hull machinery (1D) --------------------------------------------


def lower_convex_hull(v, f):
    """Indices of the vertices of the lower convex hull of the points (v_i, f_i)."""
    v = np.asarray(v, dtype=float)
    f = np.asarray(f, dtype=float)
    hull = [0]
    for i in range(1, len(v)):
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            # keep k only if it lies strictly below the chord j -> i
            lhs = (f[k] - f[j]) * (v[i] - v[k])
            rhs = (f[i] - f[k]) * (v[k] - v[j])
            if lhs >= rhs:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull, dtype=int)


def convexify(v, f):
    """Lower convex envelope of a tabulated function, evaluated on its own grid."""
    idx = lower_convex_hull(v, f)
    out = np.interp(v, v[idx], f[idx])
    out[idx] = f[idx]  # exact at hull vertices
    return out, idx


def conjugate_exact(v, f, p):
    """sup_i ( p * v_i - f_i ) for scalar or array p, via the hull sweep.

    Returns (values, argmax_index).  The argmax index refers to the original
    grid; queries whose argmax sits at the grid boundary are saturated (the
    velocity grid is too small for that momentum).
    """
    v = np.asarray(v, dtype=float)
    f = np.asarray(f, dtype=float)
    idx = lower_convex_hull(v, f)
    hv, hf = v[idx], f[idx]
    slopes = np.diff(hf) / np.diff(hv)
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    k = np.searchsorted(slopes, p_arr, side="left")
    vals = p_arr * hv[k] - hf[k]
    arg = idx[k]
    if np.ndim(p) == 0:
        return float(vals[0]), int(arg[0])
    return vals, arg


@dataclass
class ConvexTable:
    """Tabulated convex function with raw values, envelope and slope data."""

    axes: tuple                     # one sorted axis per dimension
    raw: np.ndarray
    values: np.ndarray              # convexified
    kind: str = "lagrangian"        # or "hamiltonian"
    trusted: np.ndarray = None      # interior-argmax flags for duals
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        self.raw = np.asarray(self.raw, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.trusted is None:
            self.trusted = np.ones(self.values.shape, dtype=bool)

    @property
    def dimension(self):
        return len(self.axes)

    @classmethod
    def from_raw(cls, axes, raw, kind="lagrangian", meta=None):
        """Convexify raw values (1D by hull; 2D by double conjugation)."""
        axes = tuple(np.asarray(a, dtype=float) for a in axes)
        raw = np.asarray(raw, dtype=float)
        if len(axes) == 1:
            vals, _ = convexify(axes[0], raw)
        else:
            vals = _biconjugate_nd(axes, raw)
        return cls(axes=axes, raw=raw, values=vals, kind=kind, meta=meta or {})

    def interp(self, v):
        """Piecewise-linear evaluation at points inside the grid (1D)."""
        if self.dimension != 1:
            raise NotImplementedError("interp is one-dimensional")
        ax = self.axes[0]
        v = np.asarray(v, dtype=float)
        if np.any(v < ax[0] - 1e-12) or np.any(v > ax[-1] + 1e-12):
            raise ValueError("query outside the table range")
        return np.interp(v, ax, self.values)

    def conjugate_at(self, p):
        """Exact discrete conjugate sup(p.v - values) at arbitrary momenta (1D)."""
        if self.dimension != 1:
            raise NotImplementedError("conjugate_at is one-dimensional")
        vals, _ = conjugate_exact(self.axes[0], self.values, p)
        return vals

    def convexification_gap(self):
        return float(np.max(self.raw - self.values))


def _conj_grid_1d(v, f, p_grid):
    vals, arg = conjugate_exact(v, f, p_grid)
    trusted = (arg > 0) & (arg < len(v) - 1)
    return vals, trusted, arg


def _biconjugate_nd(axes, raw):
    """Double conjugate of a 2D table back onto its own grid (= convex envelope)."""
    # conjugate along each axis onto a slope grid dense enough to be lossless is
    # subtle; here the double transform uses the table's own axes as momentum
    # grids twice, which is the standard discrete convexification surrogate.
    g1, g2 = _conjugate_nd(axes, raw, axes)
    out, _ = _conjugate_nd(axes, g1, axes)
    return out


def _conjugate_nd(axes, f, p_axes):
    """Iterated per-axis hull sweeps: H(p) = max_v (p.v - f(v)) on product grids."""
    v1, v2 = axes
    p1, p2 = p_axes
    n1 = len(v1)
    # inner transform along axis 2 for each v1: G(v1, p2) = max_v2 (p2 v2 - f)
    G = np.empty((n1, len(p2)))
    t2 = np.zeros((n1, len(p2)), dtype=bool)
    for i in range(n1):
        G[i], t2[i], _ = _conj_grid_1d(v2, f[i], p2)
    # outer transform along axis 1 for each p2; a point is trusted when the
    # argmax is interior along axis 1 and the inner sweep there was interior
    H = np.empty((len(p1), len(p2)))
    trusted = np.zeros((len(p1), len(p2)), dtype=bool)
    for j in range(len(p2)):
        H[:, j], t1, arg1 = _conj_grid_1d(v1, -G[:, j], p1)
        trusted[:, j] = t1 & t2[arg1, j]
    return H, trusted


def legendre_transform(table, p_axes):
    """Discrete Legendre-Fenchel conjugate of a ConvexTable on a momentum grid.

    Momenta whose argmax sits on the velocity-grid boundary are flagged
    untrusted: the velocity grid is too small to determine the conjugate there
    and the value is only a lower bound (truncation artifact).
    """
    if isinstance(p_axes, np.ndarray) or np.ndim(p_axes[0]) == 0:
        p_axes = (np.asarray(p_axes, dtype=float),)
    kind = "hamiltonian" if table.kind == "lagrangian" else "lagrangian"
    if table.dimension == 1:
        vals, trusted, _ = _conj_grid_1d(table.axes[0], table.values, p_axes[0])
        return ConvexTable(axes=p_axes, raw=vals, values=vals, kind=kind,
                           trusted=trusted, meta={"source": table.kind})
    H, trusted = _conjugate_nd(table.axes, table.values, p_axes)
    return ConvexTable(axes=p_axes, raw=H, values=H, kind=kind, trusted=trusted,
                       meta={"source": table.kind})


def biconjugate(table):
    """Conjugate twice, back onto the table's own grid; equals the envelope.

    For a 1D table the dual breakpoints (the hull slopes) are used as the
    intermediate momentum grid, which makes the identity exact on the grid up
    to rounding.
    """
    if table.dimension == 1:
        v = table.axes[0]
        f = table.values
        idx = lower_convex_hull(v, f)
        hv, hf = v[idx], f[idx]
        if len(idx) == 1:
            return np.full_like(f, f[idx[0]])
        slopes = np.diff(hf) / np.diff(hv)
        Hs = slopes * hv[:-1] - hf[:-1]
        out = np.max(v[:, None] * slopes[None, :] - Hs[None, :], axis=1)
        return out
    return _biconjugate_nd(table.axes, table.values)


def subdifferential(table, q):
    """One-sided slopes [d-, d+] of the envelope at a grid node q (1D).

    At the grid boundary the missing side is reported as -inf / +inf.  A
    singleton (d- == d+ within rounding) is the differentiability surrogate.
    """
    if table.dimension != 1:
        raise NotImplementedError("subdifferential is one-dimensional")
    v = table.axes[0]
    f = table.values
    i = int(np.argmin(np.abs(v - q)))
    if abs(v[i] - q) > 1e-9 * (1.0 + abs(q)):
        raise ValueError(f"q = {q} is not a grid node (nearest: {v[i]})")
    lo = -np.inf if i == 0 else (f[i] - f[i - 1]) / (v[i] - v[i - 1])
    hi = np.inf if i == len(v) - 1 else (f[i + 1] - f[i]) / (v[i + 1] - v[i])
    return float(lo), float(hi)


EXPOSED, FACE, EXTREME_ONLY = "exposed", "face", "extreme-only"


def classify_exposed(table, tol=1e-9):
    """Label each node of a convex table as exposed / face / extreme-only.

    Interior nodes with a strict slope increase across them are exposed points
    of the epigraph (a supporting line touches only there); interiors of
    affine runs are faces; grid-boundary nodes are extreme in the truncated
    epigraph but their exposure cannot be decided from the table, so they are
    labeled extreme-only.
    """
    if table.dimension != 1:
        raise NotImplementedError("classification is one-dimensional")
    v = table.axes[0]
    f = table.values
    slopes = np.diff(f) / np.diff(v)
    scale = max(1.0, float(np.max(np.abs(slopes))) if slopes.size else 1.0)
    labels = np.empty(len(v), dtype=object)
    labels[0] = labels[-1] = EXTREME_ONLY
    for i in range(1, len(v) - 1):
        labels[i] = EXPOSED if slopes[i] - slopes[i - 1] > tol * scale else FACE
    return labels


# -- long-time averaging ----------------------------------------------------


@dataclass
class AveragingRun:
    """Per-rho, per-seed scaled fundamental-solution samples L(rho v, rho)/rho."""

    v_grid: np.ndarray
    rho_ladder: np.ndarray
    seeds: list
    values: np.ndarray      # shape (n_seeds, n_rho, n_v)

    def seed_mean(self):
        return self.values.mean(axis=0)

    def seed_spread(self):
        """Max over v of the across-seed spread, one entry per rho level."""
        return np.array([float(np.max(self.values[:, k, :].max(axis=0)
                                      - self.values[:, k, :].min(axis=0)))
                         for k in range(len(self.rho_ladder))])

    def cauchy_increments(self):
        """Max over v of |mean(rho_k) - mean(rho_{k-1})| per ladder step."""
        m = self.seed_mean()
        return np.array([float(np.max(np.abs(m[k] - m[k - 1])))
                         for k in range(1, len(self.rho_ladder))])


@dataclass
class LagrangianEstimate:
    table: ConvexTable
    run: AveragingRun
    converged: bool
    meta: dict = field(default_factory=dict)


def estimate_lagrangian(env_spec, rng_seeds, v_grid, rho_ladder, *, dx,
                        steepness=4.0, params=None, domain_pad=None,
                        certify_first=False, threads=1, n_snapshots=0):
    """Estimate the effective Lagrangian by seed-averaged long-time averages.

    One fundamental-solution solve per seed with vertex (0, 0) and snapshots at
    the rho ladder gives L(rho v, rho, 0, 0)/rho for every v at once; the
    estimate is the seed average at the top of the ladder, convexified.  The
    ladder must hold at least three increasing levels and random families need
    at least three seeds.  Growing Cauchy increments mark the run unconverged.
    Certification of the cone steepness is run for the first seed only when
    certify_first is set; the bulk solves reuse the certified configuration.
    """
    v_grid = np.asarray(v_grid, dtype=float)
    rho_ladder = np.asarray(sorted(float(r) for r in rho_ladder))
    if len(rho_ladder) < 3:
        raise ValueError("rho ladder must cover at least 3 levels")
    if np.any(np.diff(rho_ladder) <= 0):
        raise ValueError("rho ladder must be strictly increasing")
    rng_seeds = list(rng_seeds)
    if env_spec.family.startswith("random") and len(rng_seeds) < 3:
        raise ValueError("random families need at least 3 seeds")
    if env_spec.dimension != 1:
        raise NotImplementedError("long-time averaging is implemented in 1D")

    rho_max = rho_ladder[-1]
    vmax = float(np.max(np.abs(v_grid)))
    pad = domain_pad if domain_pad is not None else max(2.0, 0.2 * vmax * rho_max)
    half = vmax * rho_max + pad
    npts = 2 * int(round(half / dx)) + 1
    grid = GridSpec(dimension=1, extent=(2 * half,), points=(npts,),
                    boundary="linear-extrapolation")

    def solve_one(k_seed):
        k, s = k_seed
        env = make_environment(env_spec, Seed(s))
        tab = compute_fundamental(env, Vertex((0.0,), 0.0), rho_max, grid,
                                  steepness=steepness, params=params,
                                  snapshot_times=rho_ladder,
                                  certify=certify_first and k == 0)
        out = np.empty((len(rho_ladder), len(v_grid)))
        for i, rho in enumerate(rho_ladder):
            out[i] = tab.at(np.array([rho * v_grid]), rho) / rho
        return k, out

    values = np.empty((len(rng_seeds), len(rho_ladder), len(v_grid)))
    jobs = list(enumerate(rng_seeds))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            for k, out in ex.map(solve_one, jobs):
                values[k] = out
    else:
        for job in jobs:
            k, out = solve_one(job)
            values[k] = out

    run = AveragingRun(v_grid=v_grid, rho_ladder=rho_ladder, seeds=rng_seeds,
                       values=values)
    incr = run.cauchy_increments()
    converged = bool(np.all(incr[1:] <= incr[:-1] * 1.25 + 1e-9))
    raw = run.seed_mean()[-1]
    table = ConvexTable.from_raw((v_grid,), raw, kind="lagrangian",
                                 meta={"rho_ladder": rho_ladder.tolist(),
                                       "seeds": rng_seeds,
                                       "cauchy_increments": incr.tolist(),
                                       "converged": converged,
                                       "dx": dx, "steepness": steepness})
    return LagrangianEstimate(table=table, run=run, converged=converged,
                              meta=table.meta)
