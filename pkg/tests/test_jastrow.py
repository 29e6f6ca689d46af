import math

import numpy as np
import pytest

from conftest import random_nonoverlapping
from hsvmc.errors import GeometryError, OverlapError
from hsvmc.geometry import SimulationBox
from hsvmc.jastrow import Configuration, local_energy, local_energy_batch, log_weight
from hsvmc.oracle import laplacian_fd, local_energy_naive, log_weight_reference
from hsvmc.scattering import eval_f, solve_neumann


def cfg(X, L=10.0, ell=4.0):
    return Configuration(np.asarray(X, dtype=float), SimulationBox(L), ell)


def test_single_particle_weight(small_sol):
    assert log_weight(cfg([[0.3, 0.1, -2.0]]), small_sol) == 0.0


def test_far_apart_pairs(small_sol):
    X = [[0, 0, 0], [4.5, 0, 0], [0, 4.5, 0]]
    assert log_weight(cfg(X), small_sol) == 0.0
    e = local_energy(cfg(X), small_sol)
    assert (e.two_body, e.three_body, e.total) == (0.0, 0.0, 0.0)


def test_overlap_sentinel(small_sol):
    X = [[0, 0, 0], [0.9, 0, 0]]
    assert log_weight(cfg(X), small_sol) == -math.inf
    with pytest.raises(OverlapError):
        local_energy(cfg(X), small_sol)


def test_pair_weight(small_sol):
    X = [[0, 0, 0], [0, 2.2, 0]]
    assert log_weight(cfg(X), small_sol) == pytest.approx(2 * math.log(eval_f(small_sol, 2.2)), rel=1e-14)
    e = local_energy(cfg(X), small_sol)
    assert e.three_body == 0.0
    assert e.total == pytest.approx(2 * small_sol.eigenvalue, rel=1e-14)


def test_equilateral_triangle_fd(small_sol):
    r = 2.5
    X = np.array([[0, 0, 0], [r, 0, 0], [r / 2, r * math.sqrt(3) / 2, 0]])
    e = local_energy(cfg(X), small_sol).total
    fd = laplacian_fd(X, 10.0, small_sol, 1e-5 * 4.0)
    assert fd == pytest.approx(e, rel=1e-4)


def test_matches_naive_and_reference(small_sol, gen):
    for n in (2, 5, 13, 30):
        X = random_nonoverlapping(gen, n, 10.0, 1.0)
        e = local_energy(cfg(X), small_sol)
        two, three = local_energy_naive(X, 10.0, small_sol)
        assert e.two_body == pytest.approx(two, rel=1e-10, abs=1e-300)
        assert e.three_body == pytest.approx(three, rel=1e-10, abs=1e-14)
        assert log_weight(cfg(X), small_sol) == pytest.approx(log_weight_reference(X, 10.0, small_sol), rel=1e-12)


def test_cell_list_path_agrees():
    # L / ell >= 3 switches on the cell list
    sol = solve_neumann(1.0, 3.0)
    gen = np.random.default_rng(3)
    X = random_nonoverlapping(gen, 60, 20.0, 1.0)
    c = Configuration(X, SimulationBox(20.0), 3.0)
    assert c.n_cells == 6
    e = local_energy(c, sol)
    two, three = local_energy_naive(X, 20.0, sol)
    assert e.two_body == pytest.approx(two, rel=1e-12)
    assert e.three_body == pytest.approx(three, rel=1e-10)
    i, j = c.neighbor_pairs()
    d = X[:, None] - X[None]
    d -= 20.0 * np.round(d / 20.0)
    r = np.sqrt((d * d).sum(-1))
    expected = {(p, q) for p, q in zip(*np.nonzero(np.triu(r <= 3.0, 1)))}
    assert set(zip(i.tolist(), j.tolist())) == expected


def test_permutation_invariance_exact(small_sol, gen):
    X = random_nonoverlapping(gen, 20, 10.0, 1.0)
    perm = gen.permutation(20)
    a, b = cfg(X), cfg(X[perm])
    assert log_weight(a, small_sol) == log_weight(b, small_sol)
    assert local_energy(a, small_sol).total == local_energy(b, small_sol).total


def test_translation_invariance(small_sol, gen):
    X = random_nonoverlapping(gen, 20, 10.0, 1.0)
    shift = gen.uniform(-30, 30, size=3)
    lw0, lw1 = log_weight(cfg(X), small_sol), log_weight(cfg(X + shift), small_sol)
    e0, e1 = local_energy(cfg(X), small_sol).total, local_energy(cfg(X + shift), small_sol).total
    assert lw1 == pytest.approx(lw0, rel=1e-10)
    assert e1 == pytest.approx(e0, rel=1e-10)


def test_batch_matches_scalar(small_sol, gen):
    B = np.stack([random_nonoverlapping(gen, 4, 10.0, 1.0) for _ in range(50)])
    B[0, 1] = B[0, 0] + [0.5, 0, 0]
    two, three = local_energy_batch(B, SimulationBox(10.0), small_sol)
    assert np.isnan(two[0]) and np.isnan(three[0])
    for m in range(1, 50):
        e = local_energy(cfg(B[m]), small_sol)
        assert two[m] == pytest.approx(e.two_body, rel=1e-12, abs=1e-300)
        assert three[m] == pytest.approx(e.three_body, rel=1e-9, abs=1e-14)


def test_range_too_large_for_box():
    sol = solve_neumann(1.0, 6.0)
    with pytest.raises(GeometryError):
        log_weight(cfg([[0, 0, 0], [2, 0, 0]], L=10.0, ell=6.0), sol)
