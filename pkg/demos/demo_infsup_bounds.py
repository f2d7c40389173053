"""Upper-bound the effective Hamiltonian through the inf-sup formula.

Any smooth corrector candidate gives sup_(x,t) of the stationary expression
as an upper bound for Hbar(p); optimizing finite harmonic coefficients
tightens it.  The zero corrector gives the trivial bound sup H(p, x, t), and
for a constant environment no corrector can improve on H(p) itself.

Run:  python demos/demo_infsup_bounds.py
"""

from hjhom import (EnvironmentSpec, Seed, harmonic_ansatz, infsup_upper_bound,
                   make_environment)


def main():
    const = EnvironmentSpec(family="constant", gamma=3.0, growth_const=1.5,
                            sigma_shape=(0.0,))
    env0 = make_environment(const)
    b = infsup_upper_bound(env0, 1.5)
    print(f"constant env, p = 1.5: bound = {b.value:.4f} (H(1.5) = {1.5 ** 3})")

    periodic = EnvironmentSpec(family="periodic", gamma=3.0, growth_const=1.5,
                               sigma_shape=(0.3,), mod_amp_a=0.25,
                               mod_amp_v=0.4, period_or_cell=1.0)
    env = make_environment(periodic, Seed(0))
    ansatz = harmonic_ansatz(1, 1.0, max_mode=1)
    print("\nperiodic env: p, psi0 bound (sup H), optimized bound")
    for p in (0.0, 0.5, 1.0, 1.5, 2.0):
        b = infsup_upper_bound(env, p, ansatz, budget=300, n_grid=24)
        gain = b.psi0_value - b.value
        print(f"  p = {p:3.1f}:  {b.psi0_value:7.4f}  ->  {b.value:7.4f} "
              f"(improved by {gain:.4f}; certified: {b.certified})")


if __name__ == "__main__":
    main()
