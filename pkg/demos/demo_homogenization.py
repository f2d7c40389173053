"""Verify the homogenization limit directly: u_eps converges to ubar.

The oscillatory problem is solved at each rung of an eps ladder and compared,
on a fixed space-time window, with the Hopf-Lax evolution of the same data
under the estimated effective Lagrangian.  The window error should fall down
the ladder (qualitative limit; no rate).  Takes a few minutes.

Run:  python demos/demo_homogenization.py
"""

import numpy as np

from hjhom import EnvironmentSpec, estimate_lagrangian, verify_homogenization


def main():
    spec = EnvironmentSpec(family="periodic", gamma=3.0, growth_const=2.0,
                           sigma_shape=(0.3,), mod_amp_a=0.3, mod_amp_v=0.6,
                           period_or_cell=1.0)
    v_grid = np.linspace(-2.5, 2.5, 51)
    print("estimating the effective Lagrangian (rho ladder to 32)...")
    est = estimate_lagrangian(spec, [0], v_grid, [4.0, 8.0, 16.0, 32.0],
                              dx=0.04, steepness=3.0)
    print(f"  converged: {est.converged}")

    print("\nsolving the eps ladder for cone data...")
    conv = verify_homogenization(spec, [0], "cone", est.table,
                                 [0.25, 0.125, 0.0625], window_radius=1.0,
                                 horizon=0.5, threads=2)
    print("  eps        window error")
    for row in conv.to_rows():
        print(f"  1/{int(1 / row['eps']):<4d}     {row['error']:.4f}")
    print(f"  halving ratios: {[round(r, 3) for r in conv.ratios]}"
          f"  (trend verdict: {'decreasing' if conv.monotone else 'NOT decreasing'})")
    print(f"  domain-doubling padding gap: {conv.meta['padding_gap']:.1e}")


if __name__ == "__main__":
    main()
