import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_nonoverlapping
from hsvmc.cluster import (alpha_bound, alpha_coefficient, elementary_symmetric, error_budget,
                           lhy_constant, smallest_even_order, truncation_check)
from hsvmc.errors import DomainError
from hsvmc.geometry import SimulationBox
from hsvmc.jastrow import Configuration
from hsvmc.oracle import alpha_enumerate, elementary_symmetric_newton, elementary_symmetric_subsets
from hsvmc.scattering import solve_neumann


@pytest.mark.parametrize("N", [3, 4, 7, 20, 40])
def test_low_order_closed_forms(N):
    for M in range(2, 9):
        assert alpha_coefficient(3, M, N).value == -2 * (N - 2)
        if N >= 4:
            assert alpha_coefficient(4, M, N).value == 4 * (N - 2) * (N - 3)


def test_matches_enumeration():
    for N in range(3, 41):
        for k in range(3, min(N, 7) + 1):
            for M in range(k - 2, 9):
                assert alpha_coefficient(k, M, N).value == alpha_enumerate(k, M, N)


def test_independent_of_truncation_order():
    for N in range(3, 41):
        for M in range(1, 9):
            for k in range(3, min(M + 2, N) + 1):
                assert alpha_coefficient(k, M, N).value == alpha_coefficient(k, M + 1, N).value


def test_crude_bound():
    for N in (5, 12, 40):
        for M in (4, 8):
            for k in range(3, min(M + 2, N) + 1):
                assert abs(alpha_coefficient(k, M, N).value) <= alpha_bound(k, M, N)


@pytest.mark.parametrize("k,M,N", [(2, 4, 10), (7, 4, 10), (5, 4, 4)])
def test_alpha_domain(k, M, N):
    with pytest.raises(DomainError):
        alpha_coefficient(k, M, N)


def test_elementary_symmetric_oracles(gen):
    for n in range(0, 13):
        v = gen.uniform(0, 1, size=n)
        e = elementary_symmetric(v)
        assert np.allclose(e, elementary_symmetric_subsets(v), rtol=1e-12, atol=1e-15)
        assert np.allclose(e, elementary_symmetric_newton(v), rtol=1e-8, atol=1e-12)


def _cfg(X, ell=4.5):
    return Configuration(np.asarray(X, dtype=float), SimulationBox(10.0), ell)


def test_truncation_all_out_of_range():
    sol = solve_neumann(1.0, 4.5)
    X = [[0, 0, 0], [4.6, 0, 0], [0, 4.6, 0], [0, 0, 4.6]]
    res = truncation_check(_cfg(X), sol, 0, 3)
    assert res.partial_sums == [1.0, 1.0, 1.0, 1.0] and res.full_product == 1.0


def test_truncation_single_active_pair():
    sol = solve_neumann(1.0, 4.5)
    X = [[0, 0, 0], [2.0, 0, 0], [0, 4.6, 0]]
    res = truncation_check(_cfg(X), sol, 0, 2)
    u = res.u_values[0]
    assert res.partial_sums[0] == 1.0 >= res.full_product
    assert res.partial_sums[1] == pytest.approx(1 - u, abs=1e-15)
    assert res.partial_sums[1] == pytest.approx(res.full_product, abs=1e-15)
    assert res.sandwich_holds()


def test_truncation_sandwich_random(gen):
    sol = solve_neumann(1.0, 4.5)
    for _ in range(500):
        X = random_nonoverlapping(gen, 12, 10.0, 1.0)
        for i in (0, 5):
            res = truncation_check(_cfg(X), sol, i, min(6, 11 - i))
            assert res.sandwich_holds(1e-12)


def test_error_budget_example():
    b = error_budget(1e-4, 1.0, 0.1)
    assert b.ell == pytest.approx(39.81071705534973, rel=1e-12)
    assert b.rho * b.a * b.ell**2 == pytest.approx(0.158489, rel=1e-5)
    assert b.M == 4
    assert b.terms["scattering"] == pytest.approx(1 / b.ell)


def test_smallest_even_order():
    assert smallest_even_order(0.1) == 4
    # 1/(4 eps) = 5 exactly; the strict inequality M - 1 > 5 forces M = 8
    assert smallest_even_order(0.05) == 8
    assert smallest_even_order(0.2) == 4
    assert smallest_even_order(0.24) == 4
    assert smallest_even_order(0.3) == 2


@settings(max_examples=1000, deadline=None)
@given(st.floats(1e-9, 1e-2), st.floats(0.1, 10.0), st.floats(1e-3, 0.249))
def test_budget_identity(gas, a, eps):
    rho = gas / a**3
    b = error_budget(rho, a, eps)
    assert rho * a * b.ell**2 == pytest.approx(gas ** (2 * eps), rel=1e-12)


@pytest.mark.parametrize("rho,a,eps", [(0.1, 1.0, 0.1), (1e-4, 1.0, 0.25), (1e-4, 1.0, 0.0),
                                       (0.0, 1.0, 0.1), (1e-4, -1.0, 0.1)])
def test_budget_domain(rho, a, eps):
    with pytest.raises(DomainError):
        error_budget(rho, a, eps)


def test_lhy_constant():
    assert lhy_constant() == pytest.approx(4.8144177796, rel=1e-10)
