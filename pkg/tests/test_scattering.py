import math

import numpy as np
import pytest

from hsvmc.errors import NoBracket
from hsvmc.oracle import ode_shooting_f
from hsvmc.scattering import (eval_f, eval_f_prime, lambda_reference, omega, pair_integrals,
                              solve_neumann, u, u_norms)

# Independent values from the shooting/quadrature oracles, frozen here.
LAMBDA_RATIO_L10 = 1.2101  # lambda ell^3 / (3 a) at a = 1, ell = 10
U_L1_RATIO_L10 = 2.6463    # ||u||_1 / (a ell^2) at a = 1, ell = 10


def test_root_condition():
    for a, ell in ((1.0, 2.0), (1.0, 10.0), (0.3, 77.0)):
        s = solve_neumann(a, ell)
        x = s.wavenumber * (ell - a)
        assert 0 < x < math.pi / 2
        assert math.tan(x) == pytest.approx(x * ell / (ell - a), rel=1e-11)
        assert s.eigenvalue == s.wavenumber**2
        assert abs(s.residual) <= 1e-12


def test_lambda_large_ell():
    s = solve_neumann(1.0, 100.0)
    assert abs(s.eigenvalue / 3e-6 - 1.0) <= 0.03


def test_lambda_ell10_frozen_oracle_value():
    s = solve_neumann(1.0, 10.0)
    assert s.eigenvalue * 1000.0 / 3.0 == pytest.approx(LAMBDA_RATIO_L10, abs=5e-4)


def test_free_solution():
    s = solve_neumann(0.0, 5.0)
    assert s.is_free and s.eigenvalue == 0.0
    r = np.linspace(0, 10, 50)
    assert np.all(eval_f(s, r) == 1.0) and np.all(eval_f_prime(s, r) == 0.0)
    n = u_norms(s)
    assert (n.u_l1, n.grad_u_l1, n.u_linf) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("a,ell", [(1.0, 1.0), (2.0, 1.0), (-1.0, 3.0)])
def test_no_bracket(a, ell):
    with pytest.raises(NoBracket):
        solve_neumann(a, ell)


def test_tolerance_validated():
    with pytest.raises(ValueError):
        solve_neumann(1.0, 3.0, tol=1e-3)


def test_f_boundaries(small_sol):
    assert eval_f(small_sol, 1.0) == 0.0
    assert eval_f(small_sol, 4.0) == pytest.approx(1.0, abs=1e-14)
    assert eval_f(small_sol, 0.5) == 0.0 and eval_f(small_sol, 9.0) == 1.0
    assert eval_f_prime(small_sol, 4.0) == 0.0
    assert eval_f_prime(small_sol, 8.0) == 0.0


def test_f_midpoint_matches_ode(small_sol):
    shot = ode_shooting_f(1.0, 4.0, small_sol.eigenvalue, n_steps=4000)
    mid = shot.normalized()[2000]
    assert shot.r[2000] == pytest.approx(2.5)
    assert 0 < mid < 1
    assert mid == pytest.approx(eval_f(small_sol, 2.5), rel=1e-8)


def test_derivative_matches_finite_difference(small_sol):
    h = 1e-6 * small_sol.range
    r = np.linspace(1.01, 3.99, 200)
    fd = (eval_f(small_sol, r + h) - eval_f(small_sol, r - h)) / (2 * h)
    assert np.max(np.abs(fd / eval_f_prime(small_sol, r) - 1.0)) <= 1e-6


def test_omega_and_u(small_sol):
    r = np.linspace(0, 6, 101)
    f = eval_f(small_sol, r)
    assert np.allclose(omega(small_sol, r), 1 - f)
    assert np.allclose(u(small_sol, r), 1 - f * f)


def test_u_norms_scaling():
    s = solve_neumann(1.0, 10.0)
    n = u_norms(s)
    assert n.u_linf == 1.0
    assert 1 <= n.u_l1 / 100.0 <= 50 and 1 <= n.grad_u_l1 / 10.0 <= 50
    assert n.u_l1 / 100.0 == pytest.approx(U_L1_RATIO_L10, abs=1e-3)


def test_pair_integrals_consistent():
    s = solve_neumann(1.0, 10.0)
    ball_f2, u_int = pair_integrals(s)
    assert ball_f2 + u_int == pytest.approx(4 * math.pi * 1000 / 3, rel=1e-12)
    assert u_int == pytest.approx(u_norms(s).u_l1, rel=1e-6)


def test_lambda_reference():
    assert lambda_reference(1, 100) == pytest.approx(3e-6)
    assert lambda_reference(1, 1) == 3.0
    assert lambda_reference(2, 10) == pytest.approx(6e-3)


def test_shooting_oracle_properties(small_sol):
    lam = small_sol.eigenvalue
    shot = ode_shooting_f(1.0, 4.0, lam, n_steps=2000)
    assert abs(shot.residual) <= 1e-6 * np.max(np.abs(shot.f_prime))
    lo = ode_shooting_f(1.0, 4.0, 0.5 * lam).residual
    hi = ode_shooting_f(1.0, 4.0, 1.5 * lam).residual
    assert lo * hi < 0
    # fourth order: halving the step divides the error by about 16
    e1 = ode_shooting_f(1.0, 4.0, 1.3 * lam, n_steps=20).residual
    e2 = ode_shooting_f(1.0, 4.0, 1.3 * lam, n_steps=40).residual
    e_ref = ode_shooting_f(1.0, 4.0, 1.3 * lam, n_steps=5000).residual
    assert (e1 - e_ref) / (e2 - e_ref) == pytest.approx(16.0, rel=0.1)
