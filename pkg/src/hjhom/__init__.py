"""hjhom: a numerical laboratory for homogenization of viscous Hamilton-Jacobi
equations in space-time stationary random environments.

The pipeline: build a random environment (sigma, H), solve the equation with a
monotone finite-difference scheme, compute fundamental-solution tables and
their long-time averages to estimate the effective Lagrangian, pass to the
effective Hamiltonian by discrete Legendre-Fenchel duality, cross-validate
against the approximate cell problem, and verify the homogenization limit by
direct eps-ladder comparison.
"""

__version__ = "0.1.0"

from .environment import (EnvironmentSpec, Seed, EnvironmentField, make_environment,
                          audit_assumptions, analytic_lagrangian)
from .solver import (GridSpec, GridFunction, SchemeParams, SolverError,
                     step, compute_dt, solve_ivp, check_monotone)
from .fundamental import (Vertex, FundamentalTable, compute_fundamental,
                          check_subadditivity, check_stationarity, estimate_holder,
                          growth_bound_fit)
from .effective import (ConvexTable, convexify, legendre_transform, subdifferential,
                        classify_exposed, estimate_lagrangian)
from .cell import solve_cell_problem, plateau_check, cell_hamiltonian
from .homogenize import (initial_profile, hopf_lax_evolve, solve_effective_fd,
                         verify_homogenization)
from .bounds import harmonic_ansatz, ansatz_from_environment, infsup_upper_bound

__all__ = [
    "EnvironmentSpec", "Seed", "EnvironmentField", "make_environment",
    "audit_assumptions", "analytic_lagrangian",
    "GridSpec", "GridFunction", "SchemeParams", "SolverError",
    "step", "compute_dt", "solve_ivp", "check_monotone",
    "Vertex", "FundamentalTable", "compute_fundamental", "check_subadditivity",
    "check_stationarity", "estimate_holder", "growth_bound_fit",
    "ConvexTable", "convexify", "legendre_transform", "subdifferential",
    "classify_exposed", "estimate_lagrangian",
    "solve_cell_problem", "plateau_check", "cell_hamiltonian",
    "initial_profile", "hopf_lax_evolve", "solve_effective_fd", "verify_homogenization",
    "harmonic_ansatz", "ansatz_from_environment", "infsup_upper_bound",
]
