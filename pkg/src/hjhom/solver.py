"""Monotone explicit finite-difference solver for viscous Hamilton-Jacobi equations.

Marches   u_t = eps * tr(A(x/eps, t/eps) D^2 u) - H(Du, x/eps, t/eps) + f - lam*u
with a monotone explicit Euler update: Lax-Friedrichs numerical Hamiltonian with
a global dissipation bound (Godunov available in 1D for convex H with known
momentum argmin), centered second differences for the diffusion, and either
periodic or linear-extrapolation boundaries.  Monotonicity under the CFL bound
gives the discrete comparison principle that the verification strategy of the
surrounding modules relies on.

The Lax-Friedrichs dissipation uses an analytic bound for |dH/dp| over a capped
gradient range |p| <= P_cap.  Superquadratic Hamiltonians have unbounded dH/dp,
so the cap is mandatory; a runtime monitor asserts that observed difference
quotients stay below it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BOUNDARIES = ("periodic", "linear-extrapolation")
NUM_HAMILTONIANS = ("local-lax-friedrichs", "godunov-1d")


class SolverError(RuntimeError):
    """CFL violation, NaN detection, gradient-cap breach or stability failure."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform spatial grid.  Node i sits at origin + i * dx per axis.

    With periodic boundaries dx = extent / points (the right endpoint aliases
    the origin); with linear-extrapolation boundaries dx = extent/(points - 1)
    and both endpoints are nodes.
    """

    dimension: int
    extent: tuple
    points: tuple
    origin: tuple = None
    boundary: str = "periodic"

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if len(self.extent) != self.dimension or len(self.points) != self.dimension:
            raise ValueError("extent/points must match dimension")
        if any(p < 8 for p in self.points):
            raise ValueError("need at least 8 points per axis")
        if any(e <= 0 for e in self.extent):
            raise ValueError("extent must be positive")
        if self.origin is None:
            object.__setattr__(self, "origin", tuple(-0.5 * e for e in self.extent))

    @property
    def dx(self):
        if self.boundary == "periodic":
            return tuple(e / p for e, p in zip(self.extent, self.points))
        return tuple(e / (p - 1) for e, p in zip(self.extent, self.points))

    def axes(self):
        return [self.origin[i] + self.dx[i] * np.arange(self.points[i])
                for i in range(self.dimension)]

    def mesh(self):
        """Stacked coordinates, shape (dimension, *points)."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"))


@dataclass
class GridFunction:
    """Scalar field sampled on a GridSpec at one time."""

    grid: GridSpec
    values: np.ndarray
    time_stamp: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != tuple(self.grid.points):
            raise ValueError(f"values shape {self.values.shape} != grid {self.grid.points}")

    def copy(self):
        return GridFunction(self.grid, self.values.copy(), self.time_stamp)

    def interp(self, x):
        """Linear interpolation at physical points x of shape (n, ...)."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if self.grid.dimension == 1:
            ax = self.grid.axes()[0]
            return np.interp(x[0], ax, self.values)
        return _bilinear(self.grid, self.values, x)

    def max_gradient(self):
        g = 0.0
        for axis in range(self.grid.dimension):
            d = np.diff(self.values, axis=axis) / self.grid.dx[axis]
            if d.size:
                g = max(g, float(np.max(np.abs(d))))
        return g


def _bilinear(grid, values, x):
    axes = grid.axes()
    idx, frac = [], []
    for k in range(2):
        xi = (x[k] - axes[k][0]) / grid.dx[k]
        i0 = np.clip(np.floor(xi).astype(int), 0, grid.points[k] - 2)
        idx.append(i0)
        frac.append(np.clip(xi - i0, 0.0, 1.0))
    i, j = idx
    fx, fy = frac
    v00 = values[i, j]
    v10 = values[i + 1, j]
    v01 = values[i, j + 1]
    v11 = values[i + 1, j + 1]
    return (v00 * (1 - fx) * (1 - fy) + v10 * fx * (1 - fy)
            + v01 * (1 - fx) * fy + v11 * fx * fy)


@dataclass(frozen=True)
class SchemeParams:
    """Scheme knobs: CFL safety, numerical Hamiltonian, dissipation source, cap."""

    cfl_safety: float = 0.9
    num_hamiltonian: str = "local-lax-friedrichs"
    dissipation_source: str = "analytic"
    max_gradient_cap: float = None

    def __post_init__(self):
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.num_hamiltonian not in NUM_HAMILTONIANS:
            raise ValueError(f"num_hamiltonian must be one of {NUM_HAMILTONIANS}")
        if self.dissipation_source not in ("analytic", "sampled"):
            raise ValueError("dissipation_source must be 'analytic' or 'sampled'")


def resolve_gradient_cap(u0, params):
    """Cap = twice the Lipschitz bound of the data (plus a floor), unless set."""
    if params.max_gradient_cap is not None:
        return float(params.max_gradient_cap)
    return 2.0 * (u0.max_gradient() + 0.5)


def dissipation_bound(env, pcap, params, x=None, t=0.0):
    """Bound alpha >= sup |dH/dp| over |p| <= pcap, analytic or sampled."""
    if params.dissipation_source == "analytic":
        return float(env.dHdp_bound(pcap))
    # sampled: difference quotients of H over a momentum sweep at scattered (x, t)
    n = env.dimension
    if x is None:
        x = np.zeros((n, 5))
        x[0] = np.linspace(-1.0, 1.0, 5) * getattr(env, "period_hint", 1.0)
    ps = np.linspace(-pcap, pcap, 33)
    best = 0.0
    for axis in range(n):
        p = np.zeros((n, ps.size) + x.shape[1:])
        p[axis] = ps.reshape((-1,) + (1,) * (x.ndim - 1))
        H = env.eval_H(p, x[:, None], t)
        dq = np.abs(np.diff(H, axis=0)) / (ps[1] - ps[0])
        best = max(best, float(np.max(dq)))
    return best


def compute_dt(u, env, epsilon_scaling, params, pcap=None, alpha=None):
    """Admissible explicit step from the combined monotonicity budget.

    dt <= safety / ( n*alpha/dx + 2*n*eps*a_max/dx^2 ): the advective and
    diffusive center-weight contributions add, so taking the min of the two
    one-mechanism bounds over-steps whenever both are active (the center
    stencil weight goes negative and the update loses monotonicity); the
    harmonic form reduces to dx/(n*alpha) or dx^2/(2*n*eps*a_max) when a
    single mechanism is present.  alpha bounds |dH/dp| over the capped
    gradient range; raises SolverError when that bound is not finite (cap
    missing with unbounded dH/dp).
    """
    if pcap is None:
        pcap = resolve_gradient_cap(u, params)
    if alpha is None:
        alpha = dissipation_bound(env, pcap, params)
    if not np.isfinite(alpha):
        raise SolverError("dissipation bound is not finite; set max_gradient_cap")
    n = u.grid.dimension
    dx_min = min(u.grid.dx)
    rate = n * alpha / dx_min
    a_max = float(getattr(env, "a_max", 0.0))
    if epsilon_scaling * a_max > 0:
        rate += 2.0 * n * epsilon_scaling * a_max / dx_min ** 2
    if rate <= 0:
        # H flat in p and no diffusion: any step works, pick the grid scale
        return params.cfl_safety * dx_min
    return params.cfl_safety / rate


def _slab(ndim, axis, idx):
    return tuple(idx if k == axis else slice(None) for k in range(ndim))


def _neighbor(u, axis, shift, boundary):
    """Array whose entry i equals u[i + shift] along axis, with ghost values."""
    out = np.roll(u, -shift, axis=axis)
    if boundary == "linear-extrapolation":
        nd = u.ndim
        if shift == 1:
            edge = 2.0 * u[_slab(nd, axis, -1)] - u[_slab(nd, axis, -2)]
            out[_slab(nd, axis, -1)] = edge
        elif shift == -1:
            edge = 2.0 * u[_slab(nd, axis, 0)] - u[_slab(nd, axis, 1)]
            out[_slab(nd, axis, 0)] = edge
        else:
            raise ValueError("only unit shifts supported")
    return out


def _eval_H_multi(env, ps, x, t):
    multi = getattr(env, "eval_H_multi", None)
    if multi is not None:
        return multi(ps, x, t)
    return [env.eval_H(p, x, t) for p in ps]


def step(u, env, epsilon_scaling, params, dt, *, forcing=None, damping=0.0,
         pcap=None, alpha=None, mesh=None, check_cfl=True):
    """One monotone explicit Euler step.

    Rejects dt above the CFL bound (reporting the admissible value), monitors
    the gradient cap, and aborts on non-finite values.  forcing may be None, an
    array on the grid, or a callable (x, t) -> array.  damping adds -damping*u
    to the right-hand side (used by the cell-problem relaxation).
    """
    grid = u.grid
    n = grid.dimension
    if pcap is None:
        pcap = resolve_gradient_cap(u, params)
    if alpha is None:
        alpha = dissipation_bound(env, pcap, params)
    if check_cfl:
        admissible = compute_dt(u, env, epsilon_scaling, params, pcap=pcap, alpha=alpha)
        if dt > admissible * (1.0 + 1e-12):
            raise SolverError(f"dt = {dt:.3e} violates CFL; admissible dt = {admissible:.3e}")

    vals = u.values
    bnd = grid.boundary
    if mesh is None:
        mesh = grid.mesh()
    x_env = mesh / epsilon_scaling if epsilon_scaling != 1.0 else mesh
    t_env = u.time_stamp / epsilon_scaling

    dplus, dminus = [], []
    gmax = 0.0
    for axis in range(n):
        up = _neighbor(vals, axis, +1, bnd)
        um = _neighbor(vals, axis, -1, bnd)
        dp = (up - vals) / grid.dx[axis]
        dm = (vals - um) / grid.dx[axis]
        dplus.append(dp)
        dminus.append(dm)
        gmax = max(gmax, float(np.max(np.abs(dp))))
    if gmax > pcap * (1.0 + 1e-9):
        raise SolverError(
            f"gradient monitor: observed |Du| = {gmax:.3g} exceeds cap {pcap:.3g} "
            f"at t = {u.time_stamp:.6g}; raise max_gradient_cap"
        )

    if params.num_hamiltonian == "godunov-1d":
        if n != 1:
            raise SolverError("godunov-1d requires a one-dimensional grid")
        pstar = float(getattr(env, "p_argmin", 0.0))
        pm, pp = dminus[0], dplus[0]
        pg = np.clip(pstar, np.minimum(pm, pp), np.maximum(pm, pp))
        Hm, Hp, Hg = _eval_H_multi(env, [pm[None], pp[None], pg[None]], x_env, t_env)
        H_num = np.where(pm <= pp, Hg, np.maximum(Hm, Hp))
    else:
        pmid = np.stack([0.5 * (dplus[i] + dminus[i]) for i in range(n)])
        (H_num,) = _eval_H_multi(env, [pmid], x_env, t_env)
        for axis in range(n):
            H_num = H_num - 0.5 * alpha * (dplus[axis] - dminus[axis])

    rhs = -H_num
    if epsilon_scaling > 0 and float(getattr(env, "a_max", 0.0)) > 0:
        a_diag = env.eval_A_diag(x_env, t_env)
        lap = np.zeros_like(vals)
        for axis in range(n):
            up = _neighbor(vals, axis, +1, bnd)
            um = _neighbor(vals, axis, -1, bnd)
            lap += a_diag[axis] * (up - 2.0 * vals + um) / grid.dx[axis] ** 2
        full = getattr(env, "eval_A_full", None)
        if full is not None and n == 2:
            lap += _mixed_term(vals, grid, full(x_env, t_env))
        rhs = rhs + epsilon_scaling * lap
    if forcing is not None:
        f = forcing(mesh, u.time_stamp) if callable(forcing) else forcing
        rhs = rhs + f
    if damping:
        rhs = rhs - damping * vals

    new = vals + dt * rhs
    if not np.all(np.isfinite(new)):
        raise SolverError(f"non-finite values after step at t = {u.time_stamp:.6g}")
    return GridFunction(grid, new, u.time_stamp + dt)


def _mixed_term(vals, grid, A_full):
    """Monotone corner stencil for 2 a12 u_xy (sign-split corners)."""
    a12 = A_full[0, 1]
    if not np.any(a12):
        return 0.0
    dx, dy = grid.dx
    bnd = grid.boundary
    upp = _neighbor(_neighbor(vals, 0, +1, bnd), 1, +1, bnd)
    umm = _neighbor(_neighbor(vals, 0, -1, bnd), 1, -1, bnd)
    upm = _neighbor(_neighbor(vals, 0, +1, bnd), 1, -1, bnd)
    ump = _neighbor(_neighbor(vals, 0, -1, bnd), 1, +1, bnd)
    up0 = _neighbor(vals, 0, +1, bnd)
    um0 = _neighbor(vals, 0, -1, bnd)
    u0p = _neighbor(vals, 1, +1, bnd)
    u0m = _neighbor(vals, 1, -1, bnd)
    pos = np.maximum(a12, 0.0)
    neg = np.maximum(-a12, 0.0)
    mix_pos = (2.0 * vals + upp + umm - up0 - um0 - u0p - u0m) / (2.0 * dx * dy)
    mix_neg = -(2.0 * vals + upm + ump - up0 - um0 - u0p - u0m) / (2.0 * dx * dy)
    return 2.0 * (pos * mix_pos + neg * mix_neg)


@dataclass
class SolveResult:
    """Final state plus snapshots and the scheme constants actually used."""

    final: GridFunction
    snapshots: list = field(default_factory=list)
    snapshot_times: list = field(default_factory=list)
    dt: float = 0.0
    alpha: float = 0.0
    gradient_cap: float = 0.0
    n_steps: int = 0


def solve_ivp(u0, env, epsilon_scaling, params, t_final, *, snapshot_times=(),
              forcing=None, damping=0.0, stability_check=True):
    """Time-march u0 to t_final, recording snapshots at the requested times.

    The step size is fixed from the CFL bound at the initial data (the
    dissipation bound is global over the capped gradient range, so it does not
    change during the solve) and subdivided exactly to hit each snapshot time,
    which keeps runs deterministic.  A sup-norm monitor checks the a priori
    bound |u(t)| <= |u0| + (t - t0) * sup|H(0,.,.)| (+ forcing) at every event.
    """
    if t_final <= u0.time_stamp:
        raise ValueError("t_final must exceed the initial time stamp")
    pcap = resolve_gradient_cap(u0, params)
    alpha = dissipation_bound(env, pcap, params)
    dt_base = compute_dt(u0, env, epsilon_scaling, params, pcap=pcap, alpha=alpha)

    events = sorted({float(t) for t in snapshot_times if u0.time_stamp < t <= t_final})
    if not events or events[-1] < t_final:
        events.append(t_final)

    mesh = u0.grid.mesh()
    u = u0.copy()
    sup0 = float(np.max(np.abs(u.values)))
    f_bound = 0.0
    if forcing is not None and not callable(forcing):
        f_bound = float(np.max(np.abs(forcing)))

    result = SolveResult(final=u, dt=dt_base, alpha=alpha, gradient_cap=pcap)
    wanted = {float(t) for t in snapshot_times}
    n_steps = 0
    for t_ev in events:
        span = t_ev - u.time_stamp
        m = max(1, int(math.ceil(span / dt_base - 1e-12)))
        dt = span / m
        for _ in range(m):
            u = step(u, env, epsilon_scaling, params, dt, forcing=forcing,
                     damping=damping, pcap=pcap, alpha=alpha, mesh=mesh,
                     check_cfl=False)
            n_steps += 1
        u.time_stamp = t_ev  # avoid accumulated roundoff in the stamp
        if stability_check:
            bound = sup0 + (t_ev - u0.time_stamp) * (float(env.max_abs_H0) + f_bound)
            sup = float(np.max(np.abs(u.values)))
            if sup > bound * (1.0 + 1e-7) + 1e-9:
                raise SolverError(
                    f"stability monitor: |u({t_ev:.4g})| = {sup:.4g} exceeds the "
                    f"a priori bound {bound:.4g}"
                )
        if t_ev in wanted:
            result.snapshots.append(u.copy())
            result.snapshot_times.append(t_ev)
    result.final = u
    result.n_steps = n_steps
    return result


@dataclass
class MonotoneReport:
    """Outcome of the monotonicity probes and diffusion-stencil inspection."""

    passed: bool
    min_probe_sensitivity: float
    min_diffusion_weight: float
    offending: str = ""

    def to_dict(self):
        return {"passed": bool(self.passed),
                "min_probe_sensitivity": self.min_probe_sensitivity,
                "min_diffusion_weight": self.min_diffusion_weight,
                "offending": self.offending}


def diffusion_stencil_weights(A, dx):
    """Off-center weights of the (9-point in 2D) diffusion stencil for matrix A.

    For diagonal A these are a_ii / dx_i^2 >= 0.  With a cross term the axis
    weights become a_ii/dx_i^2 - |a12|/(dx dy), nonnegative exactly under
    diagonal dominance |a12| <= min(a11, a22) (on a square mesh).
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    weights = {}
    if n == 1:
        weights["axis0"] = A[0, 0] / dx[0] ** 2
        return weights
    a12 = abs(A[0, 1])
    weights["axis0"] = A[0, 0] / dx[0] ** 2 - a12 / (dx[0] * dx[1])
    weights["axis1"] = A[1, 1] / dx[1] ** 2 - a12 / (dx[0] * dx[1])
    weights["corner"] = a12 / (2.0 * dx[0] * dx[1])
    return weights


def check_monotone(env, params, grid=None, *, epsilon_scaling=1.0, t=0.0,
                   n_probes=24, delta=None, rng_seed=0, A_matrix=None):
    """Verify the update is nondecreasing in each neighbor value.

    Finite perturbation probes: bump one neighbor of a probe node and check the
    updated node value does not decrease.  Additionally inspect the diffusion
    stencil weights for the environment's A (or an explicit A_matrix, e.g. to
    audit a user-supplied full diffusion) and report the offending weight if
    diagonal dominance fails.
    """
    if grid is None:
        n = env.dimension
        pts = (64,) if n == 1 else (24, 24)
        grid = GridSpec(dimension=n, extent=(4.0,) * n, points=pts)
    n = grid.dimension
    rng = np.random.default_rng(rng_seed)
    pcap = params.max_gradient_cap or 4.0
    # smooth random-phase data with gradients comfortably below the cap
    mesh = grid.mesh()
    vals = np.zeros(grid.points)
    for axis in range(n):
        w = 4.0 * np.pi / grid.extent[axis]
        amp = 0.35 * pcap / (w * n)
        vals = vals + amp * np.sin(w * mesh[axis] + rng.uniform(0, 2 * np.pi))
    u = GridFunction(grid, vals, t)
    alpha = dissipation_bound(env, pcap, params)
    dt = compute_dt(u, env, epsilon_scaling, params, pcap=pcap, alpha=alpha)
    base = step(u, env, epsilon_scaling, params, dt, pcap=pcap, alpha=alpha).values

    if delta is None:
        delta = 1e-3 * min(grid.dx) * pcap
    offsets = []
    for axis in range(n):
        offsets.append(tuple(+1 if k == axis else 0 for k in range(n)))
        offsets.append(tuple(-1 if k == axis else 0 for k in range(n)))
    if n == 2:
        offsets += [(1, 1), (-1, -1), (1, -1), (-1, 1)]

    min_sens = np.inf
    offending = ""
    nodes = [tuple(rng.integers(1, p - 1) for p in grid.points) for _ in range(n_probes)]
    for node in nodes:
        for off in offsets:
            nb = tuple((node[k] + off[k]) % grid.points[k] for k in range(n))
            bumped = u.copy()
            bumped.values[nb] += delta
            new = step(bumped, env, epsilon_scaling, params, dt,
                       pcap=pcap, alpha=alpha).values
            sens = (new[node] - base[node]) / delta
            if sens < min_sens:
                min_sens = float(sens)
                if sens < -1e-9:
                    offending = f"neighbor {off} at node {node}: sensitivity {sens:.3e}"

    # diffusion stencil inspection
    min_w = np.inf
    if A_matrix is not None:
        A_list = [np.asarray(A_matrix, dtype=float)]
    else:
        diag = env.eval_A_diag(grid.mesh() / epsilon_scaling, t / epsilon_scaling)
        A_list = [np.diag([float(np.max(diag[i])) for i in range(n)])]
    for A in A_list:
        for name, w in diffusion_stencil_weights(A, grid.dx).items():
            if w < min_w:
                min_w = float(w)
                if w < -1e-12:
                    offending = f"diffusion stencil weight {name} = {w:.3e} (need >= 0)"

    passed = min_sens >= -1e-9 and min_w >= -1e-12
    return MonotoneReport(passed=passed, min_probe_sensitivity=float(min_sens),
                          min_diffusion_weight=float(min_w), offending=offending)
