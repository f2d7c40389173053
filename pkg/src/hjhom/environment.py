"""Random space-time environments (sigma, H) for viscous Hamilton-Jacobi equations.

An environment supplies a Hamiltonian H(p, x, t) that is convex and superquadratic
in the momentum p, together with a (possibly degenerate) diffusion matrix
A = sigma sigma^T.  All built-in families have the separable-modulated form

    H(p, x, t) = a(x, t) |p|^gamma + V(x, t),    a in [1/C, C],  |V| <= C - 1,

which makes convexity in p and the growth sandwich

    (1/C) |p|^gamma - C <= H(p, x, t) <= C (|p|^gamma + 1)

automatic and auditable.  Space-time stationarity is realized computationally:
every field is evaluated at (x + shift_x, t + shift_t), and translating the
environment just adds to the shift, so

    eval at (x + y, t + s) with shift 0  ==  eval at (x, t) with shift (y, s)

holds exactly.  True ergodicity is approximated by large-period random fields
plus averaging over independent rng seeds.

Environment protocol used by the solver (duck-typed; built-ins and the wrapper
classes in other modules all satisfy it):

    dimension          spatial dimension n
    eval_H(p, x, t)    batch Hamiltonian; p, x of shape (n, ...), t broadcastable
    eval_sigma(x, t)   diagonal entries of sigma, shape (n, ...)
    eval_A_diag(x, t)  diagonal entries of A = sigma sigma^T
    dHdp_bound(pmax)   analytic bound for max |dH/dp| over |p| <= pmax
    a_max              upper bound for the diagonal of A over all (x, t)
    max_abs_H0         upper bound for sup |H(0, x, t)|
    p_argmin           momentum minimizing p -> H(p, x, t) (built-ins: 0)
    period_hint        heterogeneity length scale (used for relaxation cycles)
    translated(shift)  same realization with the translation group applied
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("constant", "periodic", "random-checkerboard", "random-fourier")

#: width of the checkerboard mollification ramp, as a fraction of the cell size
CHECKERBOARD_RAMP = 0.1


class EnvironmentError_(ValueError):
    """Raised for invalid environment specifications or audit failures."""


@dataclass(frozen=True)
class EnvironmentSpec:
    """Parameters defining a family of environments.

    gamma is the superquadratic growth exponent (strictly > 2) and growth_const
    the constant C >= 1 of the growth sandwich.  period_or_cell is the
    heterogeneity length scale: the period of the periodic family, the cell
    size of the checkerboard, and the shortest wavelength of the fourier
    family.  lipschitz_budget bounds the space-time Lipschitz constants of the
    coefficient fields a, V and sigma (the Lipschitz constant of H(p, .) at
    fixed p then follows as Lip(a) |p|^gamma + Lip(V)).
    """

    family: str
    gamma: float = 3.0
    growth_const: float = 1.5
    dimension: int = 1
    period_or_cell: float = 1.0
    lipschitz_budget: float = 50.0
    sigma_shape: tuple = (0.0,)
    # family knobs (unused knobs are ignored by other families)
    a0: float = 1.0              # constant family: a
    v0: float = 0.0              # constant family: V
    mod_amp_a: float = 0.25      # periodic: amplitude of the a-modulation
    mod_amp_v: float = 0.25      # periodic: amplitude of the V-modulation
    sigma_mod: float = 0.0       # periodic: relative modulation of sigma (space only)
    cells_per_period: int = 64   # checkerboard: random cells before the pattern repeats
    n_modes: int = 12            # fourier: number of random modes per field
    period_factor: int = 8       # fourier: big period = period_or_cell * period_factor
    allow_subquadratic: bool = False  # experimental: permit gamma <= 2, no guarantees

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise EnvironmentError_(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.gamma <= 2.0 and not self.allow_subquadratic:
            raise EnvironmentError_(
                f"gamma must be > 2 (got {self.gamma}); superquadratic growth is required. "
                "Set allow_subquadratic=True to experiment outside the supported regime."
            )
        if self.gamma <= 1.0:
            raise EnvironmentError_(f"gamma must exceed 1 (got {self.gamma})")
        if self.growth_const < 1.0:
            raise EnvironmentError_(f"growth_const must be >= 1 (got {self.growth_const})")
        if self.dimension not in (1, 2):
            raise EnvironmentError_(f"dimension must be 1 or 2 (got {self.dimension})")
        if self.period_or_cell <= 0:
            raise EnvironmentError_("period_or_cell must be positive")
        if len(self.sigma_shape) != self.dimension:
            raise EnvironmentError_(
                f"sigma_shape must have {self.dimension} entries (got {len(self.sigma_shape)})"
            )

    @property
    def gamma_conj(self):
        """Dual exponent gamma' = gamma / (gamma - 1), in (1, 2) for gamma > 2."""
        return self.gamma / (self.gamma - 1.0)


@dataclass(frozen=True)
class Seed:
    """Realization label: rng seed plus a space-time translation offset.

    rng_seed alone determines the untranslated realization; shift = (y..., s)
    realizes the translation group and composes additively.
    """

    rng_seed: int = 0
    shift: tuple = ()

    def shifted(self, offset):
        base = self.shift if self.shift else (0.0,) * len(offset)
        if len(base) != len(offset):
            raise ValueError(f"shift length {len(offset)} incompatible with {len(base)}")
        return Seed(self.rng_seed, tuple(b + o for b, o in zip(base, offset)))


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


@dataclass(frozen=True)
class EnvironmentField:
    """A sampled realization: deterministic function of (spec, seed).

    Coefficient containers (checkerboard cell values, fourier amplitudes /
    wavevectors / phases) are frozen at construction; evaluation is pure and
    safe to call concurrently.
    """

    spec: EnvironmentSpec
    seed: Seed
    # coefficient payload; contents depend on the family
    coeffs: dict = field(repr=False, default_factory=dict)

    # -- construction -----------------------------------------------------

    def translated(self, offset):
        """The same realization seen through the translation tau_offset."""
        return dataclasses.replace(self, seed=self.seed.shifted(offset))

    # -- coordinate plumbing ----------------------------------------------

    @property
    def dimension(self):
        return self.spec.dimension

    def _shift(self):
        d = self.spec.dimension + 1
        s = self.seed.shift if self.seed.shift else (0.0,) * d
        return s

    def _coords(self, x, t):
        """Stack shifted space-time coordinates into a list of d+1 arrays."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if x.shape[0] != self.spec.dimension:
            raise ValueError(f"x must have leading axis of length {self.spec.dimension}")
        s = self._shift()
        axes = [x[i] + s[i] for i in range(self.spec.dimension)]
        axes.append(np.asarray(t, dtype=float) + s[-1])
        return axes

    # -- field evaluation ---------------------------------------------------

    def _eval_field(self, name, axes):
        fam = self.spec.family
        if fam == "constant":
            val = self.coeffs[name]
            shape = np.broadcast(*axes).shape
            return np.full(shape, val)
        if fam == "periodic":
            return self._eval_periodic(name, axes)
        if fam == "random-checkerboard":
            return self._eval_checkerboard(name, axes)
        return self._eval_fourier(name, axes)

    def _eval_periodic(self, name, axes):
        P = self.spec.period_or_cell
        w = 2.0 * np.pi / P
        if name == "a":
            mod = np.sin(w * axes[0])
            for ax in axes[1:-1]:
                mod = mod * np.sin(w * ax)
            mod = mod * np.cos(w * axes[-1])
            return self.coeffs["a_center"] + self.coeffs["a_amp"] * mod
        mod = np.cos(w * axes[0])
        for ax in axes[1:-1]:
            mod = mod * np.cos(w * ax)
        mod = mod * np.sin(w * axes[-1])
        return self.coeffs["v_amp"] * mod

    def _eval_checkerboard(self, name, axes):
        cells = self.coeffs[name + "_cells"]
        n_cells = cells.shape[0]
        cell = self.spec.period_or_cell
        hw = 0.5 * CHECKERBOARD_RAMP
        # per-axis cell index and the two smoothstep ramps at its edges
        idxs, weights = [], []
        for ax in axes:
            xi = np.asarray(ax) / cell
            base = np.floor(xi)
            f = xi - base
            s_lo = _smoothstep((f + hw) / CHECKERBOARD_RAMP)
            s_hi = _smoothstep((f - 1.0 + hw) / CHECKERBOARD_RAMP)
            i = base.astype(np.int64)
            idxs.append(i)
            weights.append((1.0 - s_lo, s_lo - s_hi, s_hi))
        out = 0.0
        d = len(axes)
        for combo in np.ndindex(*(3,) * d):
            w_tot = 1.0
            loc = []
            for k in range(d):
                w_tot = w_tot * weights[k][combo[k]]
                loc.append(np.mod(idxs[k] + (combo[k] - 1), n_cells))
            out = out + w_tot * cells[tuple(loc)]
        return out

    def _eval_fourier(self, name, axes):
        amps = self.coeffs[name + "_amps"]
        modes = self.coeffs[name + "_modes"]
        phases = self.coeffs[name + "_phases"]
        L = self.coeffs["big_period"]
        w = 2.0 * np.pi / L
        out = self.coeffs[name + "_center"] * np.ones(np.broadcast(*axes).shape)
        for c, m, ph in zip(amps, modes, phases):
            arg = ph
            for k, ax in enumerate(axes):
                arg = arg + w * m[k] * ax
            out = out + c * np.cos(arg)
        return out

    # -- public evaluation ------------------------------------------------

    def eval_a(self, x, t):
        """Modulation coefficient a(x, t) of the |p|^gamma term."""
        return self._eval_field("a", self._coords(x, t))

    def eval_V(self, x, t):
        """Potential V(x, t) = H(0, x, t)."""
        return self._eval_field("v", self._coords(x, t))

    def eval_H(self, p, x, t):
        """Hamiltonian a(x,t) |p|^gamma + V(x,t); p of shape (n, ...)."""
        p = np.asarray(p, dtype=float)
        if p.ndim == 0:
            p = p.reshape(1)
        pn = np.sqrt(np.sum(p * p, axis=0))
        axes = self._coords(x, t)
        a = self._eval_field("a", axes)
        v = self._eval_field("v", axes)
        return a * pn ** self.spec.gamma + v

    def eval_H_multi(self, ps, x, t):
        """Evaluate H at several momentum fields sharing one field evaluation."""
        axes = self._coords(x, t)
        a = self._eval_field("a", axes)
        v = self._eval_field("v", axes)
        g = self.spec.gamma
        out = []
        for p in ps:
            p = np.asarray(p, dtype=float)
            pn = np.sqrt(np.sum(p * p, axis=0))
            out.append(a * pn ** g + v)
        return out

    def eval_sigma(self, x, t):
        """Diagonal entries of sigma(x, t), shape (n, ...)."""
        axes = self._coords(x, t)
        base = np.asarray(self.spec.sigma_shape, dtype=float)
        shape = np.broadcast(*axes).shape
        out = np.empty((self.spec.dimension,) + shape)
        mod = self.coeffs.get("sigma_mod", 0.0)
        P = self.spec.period_or_cell
        for i in range(self.spec.dimension):
            if mod:
                out[i] = base[i] * (1.0 + mod * np.sin(2.0 * np.pi * axes[i] / P))
            else:
                out[i] = base[i]
        return out

    def eval_A_diag(self, x, t):
        """Diagonal of A = sigma sigma^T (built-in sigma is diagonal)."""
        s = self.eval_sigma(x, t)
        return s * s

    # -- analytic metadata used by the solver ------------------------------

    @property
    def a_range(self):
        """Bounds (a_lo, a_hi) of the modulation coefficient, from construction."""
        fam = self.spec.family
        if fam == "constant":
            return self.coeffs["a"], self.coeffs["a"]
        if fam == "periodic":
            c, amp = self.coeffs["a_center"], self.coeffs["a_amp"]
            return c - amp, c + amp
        if fam == "random-checkerboard":
            cells = self.coeffs["a_cells"]
            return float(cells.min()), float(cells.max())
        c = self.coeffs["a_center"]
        amp = float(np.sum(np.abs(self.coeffs["a_amps"])))
        return c - amp, c + amp

    @property
    def v_bound(self):
        """Upper bound for sup |V|."""
        fam = self.spec.family
        if fam == "constant":
            return abs(self.coeffs["v"])
        if fam == "periodic":
            return abs(self.coeffs["v_amp"])
        if fam == "random-checkerboard":
            return float(np.max(np.abs(self.coeffs["v_cells"])))
        return float(np.sum(np.abs(self.coeffs["v_amps"])))

    @property
    def max_abs_H0(self):
        return self.v_bound

    @property
    def a_max(self):
        """Upper bound for the diagonal of A over all (x, t)."""
        base = np.asarray(self.spec.sigma_shape, dtype=float)
        mod = self.coeffs.get("sigma_mod", 0.0)
        return float(np.max((np.abs(base) * (1.0 + abs(mod))) ** 2)) if base.size else 0.0

    @property
    def p_argmin(self):
        return 0.0

    @property
    def period_hint(self):
        return self.spec.period_or_cell

    def dHdp_bound(self, pmax):
        """Analytic bound for sup |grad_p H| over |p| <= pmax."""
        a_hi = self.a_range[1]
        g = self.spec.gamma
        return a_hi * g * max(pmax, 0.0) ** (g - 1.0)

    def lipschitz_bounds(self):
        """Analytic space-time Lipschitz bounds of the coefficient fields.

        Returns a dict with per-field bounds {a, v, sigma}; the bound for
        H(p, ., .) at momentum p is lip_a * |p|^gamma + lip_v.
        """
        fam = self.spec.family
        P = self.spec.period_or_cell
        if fam == "constant":
            lip_a = lip_v = 0.0
        elif fam == "periodic":
            w = 2.0 * np.pi / P
            lip_a = self.coeffs["a_amp"] * w
            lip_v = self.coeffs["v_amp"] * w
        elif fam == "random-checkerboard":
            # smoothstep slope max 1.5 across a ramp of width CHECKERBOARD_RAMP*cell
            ramp = CHECKERBOARD_RAMP * P
            da = float(np.ptp(self.coeffs["a_cells"]))
            dv = float(np.ptp(self.coeffs["v_cells"]))
            lip_a = 1.5 * da / ramp
            lip_v = 1.5 * dv / ramp
        else:
            L = self.coeffs["big_period"]
            w = 2.0 * np.pi / L
            lip_a = float(sum(c * w * np.linalg.norm(m)
                              for c, m in zip(np.abs(self.coeffs["a_amps"]), self.coeffs["a_modes"])))
            lip_v = float(sum(c * w * np.linalg.norm(m)
                              for c, m in zip(np.abs(self.coeffs["v_amps"]), self.coeffs["v_modes"])))
        mod = self.coeffs.get("sigma_mod", 0.0)
        base = np.asarray(self.spec.sigma_shape, dtype=float)
        lip_sigma = float(np.max(np.abs(base)) * abs(mod) * 2.0 * np.pi / P) if base.size else 0.0
        return {"a": lip_a, "v": lip_v, "sigma": lip_sigma}


# -- constructors ---------------------------------------------------------


def _build_constant(spec, seed):
    return {"a": spec.a0, "v": spec.v0}


def _build_periodic(spec, seed):
    C = spec.growth_const
    a_amp = min(spec.mod_amp_a, 0.95 * min(1.0 - 1.0 / C, C - 1.0)) if C > 1 else 0.0
    v_amp = min(spec.mod_amp_v, 0.95 * (C - 1.0))
    # keep the coefficient Lipschitz constants within budget
    w = 2.0 * np.pi / spec.period_or_cell
    if a_amp * w > spec.lipschitz_budget:
        a_amp = spec.lipschitz_budget / w
    if v_amp * w > spec.lipschitz_budget:
        v_amp = spec.lipschitz_budget / w
    return {"a_center": 1.0, "a_amp": a_amp, "v_amp": v_amp, "sigma_mod": spec.sigma_mod}


def _build_checkerboard(spec, seed):
    rng = np.random.default_rng(seed.rng_seed)
    C = spec.growth_const
    d = spec.dimension + 1
    n = spec.cells_per_period
    shape = (n,) * d
    a_lo, a_hi = 1.0 / C, min(C, 2.0 - 1.0 / C)  # keep a within [1/C, C], moderate spread
    ramp = CHECKERBOARD_RAMP * spec.period_or_cell
    # cap the value spread so the mollified field satisfies the Lipschitz budget
    max_spread_a = spec.lipschitz_budget * ramp / 1.5
    if a_hi - a_lo > max_spread_a:
        mid = 0.5 * (a_hi + a_lo)
        a_lo, a_hi = mid - max_spread_a / 2, mid + max_spread_a / 2
    v_amp = min(0.95 * (C - 1.0), spec.lipschitz_budget * ramp / 3.0)
    a_cells = rng.uniform(a_lo, a_hi, size=shape)
    v_cells = rng.uniform(-v_amp, v_amp, size=shape)
    return {"a_cells": a_cells, "v_cells": v_cells}


def _build_fourier(spec, seed):
    rng = np.random.default_rng(seed.rng_seed)
    C = spec.growth_const
    d = spec.dimension + 1
    K = spec.n_modes
    big_period = spec.period_or_cell * spec.period_factor
    w = 2.0 * np.pi / big_period

    def draw(amp_target):
        modes = np.zeros((K, d), dtype=np.int64)
        for j in range(K):
            m = rng.integers(-spec.period_factor, spec.period_factor + 1, size=d)
            while not m.any():
                m = rng.integers(-spec.period_factor, spec.period_factor + 1, size=d)
            modes[j] = m
        raw = 1.0 / (1.0 + np.linalg.norm(modes, axis=1))
        amps = amp_target * raw / raw.sum()
        # enforce the Lipschitz budget by uniform rescale if needed
        lip = float(np.sum(amps * w * np.linalg.norm(modes, axis=1)))
        if lip > spec.lipschitz_budget:
            amps = amps * (spec.lipschitz_budget / lip)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=K)
        return amps, modes, phases

    a_amp = 0.9 * min(1.0 - 1.0 / C, C - 1.0) if C > 1 else 0.0
    v_amp = 0.9 * (C - 1.0)
    a_amps, a_modes, a_phases = draw(a_amp)
    v_amps, v_modes, v_phases = draw(v_amp)
    return {
        "big_period": big_period,
        "a_center": 1.0, "a_amps": a_amps, "a_modes": a_modes, "a_phases": a_phases,
        "v_center": 0.0, "v_amps": v_amps, "v_modes": v_modes, "v_phases": v_phases,
    }


_BUILDERS = {
    "constant": _build_constant,
    "periodic": _build_periodic,
    "random-checkerboard": _build_checkerboard,
    "random-fourier": _build_fourier,
}


def make_environment(spec, seed=None):
    """Construct a realization of the requested family.

    The field coefficients are a deterministic function of (spec,
    seed.rng_seed); the translation offset seed.shift is applied at every
    evaluation.  Raises EnvironmentError_ if the constructed field violates
    the growth sandwich on a quick audit grid.
    """
    if seed is None:
        seed = Seed()
    if isinstance(seed, int):
        seed = Seed(rng_seed=seed)
    env = EnvironmentField(spec=spec, seed=seed, coeffs=_BUILDERS[spec.family](spec, seed))
    a_lo, a_hi = env.a_range
    C = spec.growth_const
    if a_lo < 1.0 / C - 1e-12 or a_hi > C + 1e-12:
        raise EnvironmentError_(
            f"modulation range [{a_lo:.4g}, {a_hi:.4g}] escapes [1/C, C] = "
            f"[{1.0 / C:.4g}, {C:.4g}]"
        )
    if env.v_bound > C - 1.0 + 1e-12:
        raise EnvironmentError_(f"potential bound {env.v_bound:.4g} exceeds C - 1 = {C - 1.0:.4g}")
    report = audit_assumptions(env, quick=True)
    if not report.passed:
        raise EnvironmentError_("constructed field fails the assumption audit: "
                                + "; ".join(report.failures))
    return env


# -- audit ----------------------------------------------------------------


@dataclass
class AuditReport:
    """Outcome of sweeping the assumption checks over finite audit grids."""

    convexity_violation: float
    sandwich_lower_margin: float
    sandwich_upper_margin: float
    lipschitz_empirical: dict
    lipschitz_analytic: dict
    translation_discrepancy: float
    failures: list
    passed: bool

    def to_dict(self):
        return {
            "convexity_violation": self.convexity_violation,
            "sandwich_lower_margin": self.sandwich_lower_margin,
            "sandwich_upper_margin": self.sandwich_upper_margin,
            "lipschitz_empirical": self.lipschitz_empirical,
            "lipschitz_analytic": self.lipschitz_analytic,
            "translation_discrepancy": self.translation_discrepancy,
            "failures": list(self.failures),
            "passed": bool(self.passed),
        }


def _audit_axes(env, n_pts):
    P = env.spec.period_or_cell
    span = 2.0 * P
    axes = [np.linspace(-span, span, n_pts) for _ in range(env.spec.dimension)]
    t_axis = np.linspace(-span, span, n_pts)
    grids = np.meshgrid(*axes, t_axis, indexing="ij")
    x = np.stack(grids[:-1])
    t = grids[-1]
    return x, t


def audit_assumptions(env, p_grid=None, n_xt=None, quick=False):
    """Sweep convexity, growth sandwich, Lipschitz and stationarity checks.

    Convexity is checked by the midpoint test on momentum pairs, the sandwich
    by direct evaluation over (p, x, t) grids, Lipschitz constants by dense
    finite differences (to be compared with the analytic bounds from the
    construction), and stationarity by comparing a shifted evaluation against
    the translated environment.
    """
    n = env.spec.dimension
    if p_grid is None:
        pmax = 3.0
        p_grid = np.linspace(-pmax, pmax, 9 if quick else 17)
    if n_xt is None:
        n_xt = 9 if quick else 25
    x, t = _audit_axes(env, n_xt)
    failures = []

    a = env.eval_a(x, t)
    v = env.eval_V(x, t)
    C = env.spec.growth_const
    g = env.spec.gamma

    # convexity: midpoint test on momentum pairs along each axis
    conv_viol = 0.0
    for i, pi in enumerate(p_grid[:-2]):
        pj = p_grid[i + 2]
        pm = 0.5 * (pi + pj)
        for axis in range(n):
            def ray(s):
                p = np.zeros((n,) + a.shape)
                p[axis] = s
                return p
            lhs = env.eval_H(ray(pm), x, t)
            rhs = 0.5 * (env.eval_H(ray(pi), x, t) + env.eval_H(ray(pj), x, t))
            conv_viol = max(conv_viol, float(np.max(lhs - rhs)))
    if conv_viol > 1e-12:
        failures.append(f"(A5) convexity violated by {conv_viol:.3e}")

    # growth sandwich (A4)
    lower_margin = np.inf
    upper_margin = np.inf
    for pv in p_grid:
        p = np.zeros((n,) + a.shape)
        p[0] = pv
        H = env.eval_H(p, x, t)
        lo = (1.0 / C) * abs(pv) ** g - C
        hi = C * (abs(pv) ** g + 1.0)
        lower_margin = min(lower_margin, float(np.min(H - lo)))
        upper_margin = min(upper_margin, float(np.min(hi - H)))
    if lower_margin < -1e-10:
        failures.append(f"(A4) lower bound violated by {-lower_margin:.3e}")
    if upper_margin < -1e-10:
        failures.append(f"(A4) upper bound violated by {-upper_margin:.3e}")

    # Lipschitz constants by finite differences along each space-time axis
    def emp_lip(fld):
        best = 0.0
        h_axes = [x[i] for i in range(n)] + [t]
        for k in range(n + 1):
            da = np.diff(fld, axis=k)
            dh = np.diff(h_axes[k], axis=k)
            with np.errstate(invalid="ignore", divide="ignore"):
                q = np.abs(da) / dh
            best = max(best, float(np.nanmax(q)))
        return best

    sig = env.eval_sigma(x, t)
    lip_emp = {"a": emp_lip(a), "v": emp_lip(v),
               "sigma": max(emp_lip(sig[i]) for i in range(n))}
    lip_ana = env.lipschitz_bounds()
    for key in ("a", "v", "sigma"):
        if lip_emp[key] > lip_ana[key] * (1.0 + 1e-6) + 1e-9:
            failures.append(
                f"(A3) empirical Lipschitz of {key} ({lip_emp[key]:.3g}) exceeds "
                f"analytic bound ({lip_ana[key]:.3g})"
            )
    budget = env.spec.lipschitz_budget
    for key in ("a", "v", "sigma"):
        if lip_emp[key] > budget + 1e-9:
            failures.append(f"(A3) Lipschitz budget exceeded for {key}: {lip_emp[key]:.3g} > {budget}")

    # stationarity / translation identity (A2)
    shift = tuple([0.75 * env.spec.period_or_cell] * n + [0.4 * env.spec.period_or_cell])
    x_sh = x + np.array(shift[:-1]).reshape((n,) + (1,) * (n + 1))
    t_sh = t + shift[-1]
    p = np.zeros((n,) + a.shape)
    p[0] = 1.3
    direct = env.eval_H(p, x_sh, t_sh)
    via_tau = env.translated(shift).eval_H(p, x, t)
    trans_disc = float(np.max(np.abs(direct - via_tau)))
    if trans_disc > 1e-12:
        failures.append(f"(A2) translation identity discrepancy {trans_disc:.3e}")

    return AuditReport(
        convexity_violation=conv_viol,
        sandwich_lower_margin=lower_margin,
        sandwich_upper_margin=upper_margin,
        lipschitz_empirical=lip_emp,
        lipschitz_analytic=lip_ana,
        translation_discrepancy=trans_disc,
        failures=failures,
        passed=not failures,
    )


def analytic_lagrangian(gamma, a=1.0, v=0.0):
    """Convex conjugate of p -> a |p|^gamma + v, as a callable of velocity.

    L(w) = (gamma - 1) gamma^(-gamma') a^(-1/(gamma-1)) |w|^gamma' - v with
    gamma' = gamma/(gamma-1); for gamma = 3, a = 1, v = 0 this is
    2 * 3^(-3/2) |w|^(3/2).
    """
    gp = gamma / (gamma - 1.0)
    c = (gamma - 1.0) * gamma ** (-gp) * a ** (-1.0 / (gamma - 1.0))

    def L(w):
        return c * np.abs(w) ** gp - v

    return L
