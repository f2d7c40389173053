"""Estimate the effective Lagrangian by long-time averaging and pass to the
effective Hamiltonian by the discrete Legendre-Fenchel transform.

For the constant environment the whole pipeline has a closed form:
Lbar(v) = 2 * 3^(-3/2)|v|^(3/2) and Hbar(p) = |p|^3.  The demo prints the
Cauchy diagnostics of the rho ladder, the comparison against the analytic
curves, and writes plot-ready CSVs.  Run:
    python demos/demo_effective_hamiltonian.py
"""

import os

import numpy as np

from hjhom import EnvironmentSpec, estimate_lagrangian, legendre_transform
from hjhom.environment import analytic_lagrangian
from hjhom.report import write_convex_table


def main():
    spec = EnvironmentSpec(family="constant", gamma=3.0, growth_const=1.5,
                           sigma_shape=(0.0,))
    v_grid = np.linspace(-2.5, 2.5, 51)
    print("estimating Lbar over the rho ladder {1, 2, 4, 8}...")
    est = estimate_lagrangian(spec, [0], v_grid, [1.0, 2.0, 4.0, 8.0],
                              dx=0.05, steepness=4.0)
    print(f"  converged: {est.converged}")
    print(f"  Cauchy increments per ladder step: "
          f"{np.round(est.run.cauchy_increments(), 5)}")

    L = analytic_lagrangian(3.0)
    err = np.abs(est.table.values - L(v_grid))
    print(f"  sup error vs analytic conjugate on |v|<=2: "
          f"{err[np.abs(v_grid) <= 2].max():.4f}")
    print(f"  raw-vs-convexified gap: {est.table.convexification_gap():.2e}")

    p_grid = np.linspace(-1.2, 1.2, 49)
    hbar = legendre_transform(est.table, p_grid)
    tr = hbar.trusted
    print(f"\n  Hbar trusted on p in [{p_grid[tr].min():.2f}, "
          f"{p_grid[tr].max():.2f}] ({tr.sum()}/{tr.size} nodes)")
    herr = np.abs(hbar.values - np.abs(p_grid) ** 3)[tr]
    print(f"  sup error vs |p|^3 on trusted momenta: {herr.max():.4f}")

    out = os.path.join(os.path.dirname(__file__), "out")
    os.makedirs(out, exist_ok=True)
    write_convex_table(os.path.join(out, "lbar.csv"), est.table)
    write_convex_table(os.path.join(out, "hbar.csv"), hbar)
    print(f"\n  tables written to {out}/lbar.csv and {out}/hbar.csv")


if __name__ == "__main__":
    main()
