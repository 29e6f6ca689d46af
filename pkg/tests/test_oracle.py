import math

import numpy as np
import pytest

from hsvmc.errors import GeometryError
from hsvmc.oracle import (brute_force_n3, log_weight_reference, pair_distance_law, quad_two_body,
                          two_body_numerator)
from hsvmc.scattering import eval_f


def test_quad_free_and_geometry():
    assert quad_two_body(0.0, 4.0, 10.0).value == 0.0
    with pytest.raises(GeometryError):
        quad_two_body(1.0, 6.0, 10.0)


def test_quad_doubling_converged():
    a = quad_two_body(1.0, 4.0, 10.0, n_points=96).value
    b = quad_two_body(1.0, 4.0, 10.0, n_points=192).value
    assert abs(a - b) <= 1e-8 * abs(b)


def test_numerator_near_scattering_length():
    v = two_body_numerator(1.0, 50.0) / (4 * math.pi)
    assert 1.0 <= v <= 1.1


def test_n3_free():
    assert brute_force_n3(0.0, 4.0, 10.0)["energy_per_particle"].value == 0.0


def test_n3_dilute_limit_is_pair_counting():
    # three weakly correlated pairs: twice the two-particle value per particle
    r = brute_force_n3(1.0, 2.0, 40.0)["energy_per_particle"]
    pred = 2.0 * quad_two_body(1.0, 2.0, 40.0).value
    assert abs(r.value / pred - 1.0) <= 0.2


def test_pair_law_normalised():
    p = pair_distance_law(1.0, 4.0, 10.0, np.linspace(0, 5, 11))
    assert p.sum() == pytest.approx(1.0, rel=1e-10)
    assert p[:2].sum() == 0.0 and np.all(p >= 0)


def test_log_weight_reference_batch(small_sol):
    X = np.array([[[0, 0, 0], [2.0, 0, 0]],
                  [[0, 0, 0], [0.5, 0, 0]],
                  [[0, 0, 0], [6.0, 0, 0]]])  # torus distance 4 = ell
    out = log_weight_reference(X, 10.0, small_sol)
    assert out[0] == pytest.approx(2 * math.log(eval_f(small_sol, 2.0)), rel=1e-14)
    assert out[1] == -np.inf
    assert out[2] == pytest.approx(0.0, abs=1e-14)
    assert log_weight_reference(X[0], 10.0, small_sol) == out[0]
