import numpy as np
import pytest

from hjhom import EnvironmentSpec, Seed, make_environment


@pytest.fixture(scope="session")
def const_env():
    """H(p) = |p|^3, sigma = 0: the one case with closed forms."""
    spec = EnvironmentSpec(family="constant", gamma=3.0, growth_const=1.5,
                           sigma_shape=(0.0,))
    return make_environment(spec, Seed(0))


@pytest.fixture(scope="session")
def periodic_env():
    spec = EnvironmentSpec(family="periodic", gamma=3.0, growth_const=1.5,
                           sigma_shape=(0.3,), mod_amp_a=0.25, mod_amp_v=0.4,
                           period_or_cell=1.0)
    return make_environment(spec, Seed(0))


@pytest.fixture(scope="session")
def checkerboard_env():
    spec = EnvironmentSpec(family="random-checkerboard", gamma=3.0,
                           growth_const=1.5, sigma_shape=(0.2,),
                           period_or_cell=1.0, cells_per_period=16)
    return make_environment(spec, Seed(42))


@pytest.fixture(scope="session")
def fourier_env():
    spec = EnvironmentSpec(family="random-fourier", gamma=3.0, growth_const=1.3,
                           sigma_shape=(0.15,), period_or_cell=0.5)
    return make_environment(spec, Seed(3))


def hopf_lax_oracle(u0_fn, lagrangian, x, t, y_range=(-8.0, 8.0), n_y=4001):
    """Dense-minimization Hopf-Lax evaluation, independent of the solver."""
    y = np.linspace(*y_range, n_y)
    x = np.atleast_1d(x)
    return np.min(u0_fn(y)[None, :] + t * lagrangian((x[:, None] - y[None, :]) / t),
                  axis=1)
