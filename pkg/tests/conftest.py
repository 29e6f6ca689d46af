import numpy as np
import pytest

from hsvmc.geometry import SimulationBox
from hsvmc.scattering import solve_neumann


@pytest.fixture(scope="session")
def small_sol():
    """a = 1, ell = 4: the few-body test geometry (box side 10)."""
    return solve_neumann(1.0, 4.0)


@pytest.fixture(scope="session")
def box10():
    return SimulationBox(10.0)


@pytest.fixture
def gen():
    return np.random.default_rng(20260)


def random_nonoverlapping(gen, n, L, a, min_gap=1.001):
    while True:
        X = gen.uniform(-0.5 * L, 0.5 * L, size=(n, 3))
        d = X[:, None, :] - X[None, :, :]
        d -= L * np.round(d / L)
        r = np.sqrt(np.sum(d * d, axis=-1))[np.triu_indices(n, 1)]
        if n < 2 or np.all(r > a * min_gap):
            return X
