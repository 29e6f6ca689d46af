"""Hard-core Neumann ground state on the ball of radius ell.

Writing ``g(r) = r f(r)`` turns ``-Laplace f = lambda f`` into ``-g'' = lambda g``
with ``g(a) = 0``. The solution is ``f(r) = A sin(k (r - a)) / r`` and the
Neumann condition ``f'(ell) = 0`` becomes ``tan(k (ell - a)) = k ell``.
Outside the ball ``f`` is extended by 1, inside the core it vanishes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoBracket, NonConvergence

_BRACKET_DELTA = 1e-12
_BISECTION_STEPS = 60
_NEWTON_STEPS = 8


@dataclass(frozen=True)
class ScatteringSolution:
    core_radius: float
    range: float
    wavenumber: float
    amplitude: float
    eigenvalue: float
    residual: float = 0.0

    @property
    def is_free(self) -> bool:
        """True for the non-interacting limit a = 0, where f is identically 1."""
        return self.core_radius == 0.0

    @property
    def kernel_params(self) -> tuple[float, float, float, float]:
        """``(a, ell, k, A)`` as passed to the compiled kernels."""
        return (self.core_radius, self.range, self.wavenumber, self.amplitude)


@dataclass(frozen=True)
class UNorms:
    u_l1: float
    grad_u_l1: float
    u_linf: float


def _neumann_residual(x: float, c: float) -> float:
    # tan(x) - c x with c = ell / (ell - a) > 1
    return math.tan(x) - c * x


def solve_neumann(a: float, ell: float, tol: float = 1e-12) -> ScatteringSolution:
    """Ground state of the hard-core Neumann problem.

    Lengths are rescaled so that the core radius is 1 while the root is found;
    the result is reported in the caller's units. ``a == 0`` returns the free
    solution (f = 1, lambda = 0).
    """
    if not (0.0 < tol <= 1e-6):
        raise ValueError(f"tol must lie in (0, 1e-6], got {tol}")
    if a == 0.0 and ell > 0.0:
        return ScatteringSolution(0.0, float(ell), 0.0, 1.0, 0.0, 0.0)
    if not (a > 0.0) or not (ell > a):
        raise NoBracket(f"need 0 < a < ell, got a={a}, ell={ell}")

    ratio = ell / a
    c = ratio / (ratio - 1.0)
    lo, hi = _BRACKET_DELTA, 0.5 * math.pi - _BRACKET_DELTA
    if not (_neumann_residual(lo, c) < 0.0 < _neumann_residual(hi, c)):
        raise NoBracket(f"no sign change on the bracket for ell/a={ratio}")

    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if _neumann_residual(mid, c) < 0.0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(_NEWTON_STEPS):
        t = math.tan(x)
        step = (t - c * x) / (1.0 + t * t - c)
        x_new = x - step
        if not (lo <= x_new <= hi):
            break
        x = x_new
        if abs(step) <= 1e-16 * x:
            break

    resid = abs(math.tan(x) - c * x) / (c * x)
    if not math.isfinite(resid) or resid > tol:
        raise NonConvergence(f"root residual {resid:.3e} above tolerance {tol:.1e}")

    k = x / (ell - a)
    amplitude = ell / math.sin(x)
    return ScatteringSolution(
        core_radius=float(a),
        range=float(ell),
        wavenumber=k,
        amplitude=amplitude,
        eigenvalue=k * k,
        residual=resid,
    )


def eval_f(sol: ScatteringSolution, r):
    """Radial trial factor; accepts scalars or arrays."""
    r = np.asarray(r, dtype=np.float64)
    if sol.is_free:
        return np.ones_like(r)[()]
    a, ell, k, A = sol.kernel_params
    inner = (r > a) & (r < ell)
    rs = np.where(inner, r, ell)
    val = np.where(inner, A * np.sin(k * (rs - a)) / rs, 0.0)
    val = np.where(r >= ell, 1.0, val)
    return val[()]


def eval_f_prime(sol: ScatteringSolution, r):
    """Analytic radial derivative of :func:`eval_f`.

    At ``r == a`` the one-sided value ``A k / a`` is returned.
    """
    r = np.asarray(r, dtype=np.float64)
    if sol.is_free:
        return np.zeros_like(r)[()]
    a, ell, k, A = sol.kernel_params
    inner = (r >= a) & (r < ell)
    rs = np.where(inner, r, ell)
    phase = k * (rs - a)
    val = A * (k * rs * np.cos(phase) - np.sin(phase)) / (rs * rs)
    return np.where(inner, val, 0.0)[()]


def omega(sol: ScatteringSolution, r):
    return 1.0 - eval_f(sol, r)


def u(sol: ScatteringSolution, r):
    f = eval_f(sol, r)
    return 1.0 - f * f


def lambda_reference(a: float, ell: float) -> float:
    """Leading small-a/ell behaviour of the eigenvalue, 3 a / ell^3."""
    return 3.0 * a / ell**3


def _panel_integrals(sol: ScatteringSolution, n_points: int) -> tuple[float, float]:
    order = 16
    panels = max(1, n_points // order)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    a, ell = sol.core_radius, sol.range
    edges = np.linspace(a, ell, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    r = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    f = eval_f(sol, r)
    fp = eval_f_prime(sol, r)
    shell = 4.0 * math.pi * r * r
    u_int = float(np.sum(w * (1.0 - f * f) * shell))
    grad_int = float(np.sum(w * np.abs(2.0 * f * fp) * shell))
    return u_int, grad_int


def u_norms(sol: ScatteringSolution, quad_points: int = 4096) -> UNorms:
    """L1 norms of ``u = 1 - f^2`` and of its gradient, plus ``sup u``.

    The core ball contributes ``4 pi a^3 / 3`` to ``||u||_1`` analytically.
    Converged when doubling the point count moves both integrals by < 1e-4.
    """
    if quad_points < 1000:
        raise ValueError("quad_points must be at least 1000")
    if sol.is_free:
        return UNorms(0.0, 0.0, 0.0)
    u1, g1 = _panel_integrals(sol, quad_points)
    u2, g2 = _panel_integrals(sol, 2 * quad_points)
    if abs(u2 - u1) > 1e-4 * abs(u2) or abs(g2 - g1) > 1e-4 * abs(g2):
        raise NonConvergence("u norm quadrature failed the doubling test")
    core = 4.0 * math.pi * sol.core_radius**3 / 3.0
    return UNorms(u_l1=core + u2, grad_u_l1=g2, u_linf=1.0)


def pair_integrals(sol: ScatteringSolution, quad_points: int = 4096) -> tuple[float, float]:
    """``(int_{B_ell} f^2, int u)`` over R^3, by panel Gauss-Legendre."""
    if sol.is_free:
        return 4.0 * math.pi * sol.range**3 / 3.0, 0.0
    u_shell, _ = _panel_integrals(sol, quad_points)
    ball = 4.0 * math.pi * sol.range**3 / 3.0
    core = 4.0 * math.pi * sol.core_radius**3 / 3.0
    u_total = core + u_shell
    return ball - u_total, u_total
