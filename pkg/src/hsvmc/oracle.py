"""Slow, deterministic reference computations.

Nothing here shares code paths with the compiled kernels: distances, weights
and energies are recomputed with plain numpy or Python loops so that
agreement between the two is meaningful.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.special import roots_legendre
from scipy.stats import qmc

from .errors import GeometryError
from .geometry import SimulationBox
from .jastrow import local_energy_batch
from .scattering import ScatteringSolution, eval_f, eval_f_prime, solve_neumann


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    est_error: float
    n_points: int


def _gauss_radial(fn, lo: float, hi: float, n: int) -> float:
    x, w = roots_legendre(n)
    r = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    return float(0.5 * (hi - lo) * np.sum(w * fn(r)))


def quad_two_body(a: float, ell: float, L: float, n_points: int = 96) -> QuadratureResult:
    """Exact N = 2 energy per particle, ``lambda int chi f^2 / int_Lambda f^2``."""
    if 2.0 * ell > L:
        raise GeometryError(f"2*ell = {2 * ell} exceeds L = {L}")
    if a == 0.0:
        return QuadratureResult(0.0, 0.0, n_points)
    sol = solve_neumann(a, ell)

    def value(n):
        shell = lambda r: 4.0 * math.pi * r * r * (1.0 - eval_f(sol, r) ** 2)
        u_int = 4.0 * math.pi * a**3 / 3.0 + _gauss_radial(shell, a, ell, n)
        ball_f2 = 4.0 * math.pi * ell**3 / 3.0 - u_int
        return sol.eigenvalue * ball_f2 / (L**3 - u_int)

    v1, v2 = value(n_points), value(2 * n_points)
    return QuadratureResult(v2, abs(v2 - v1), 2 * n_points)


def two_body_numerator(a: float, ell: float, n_points: int = 192) -> float:
    """``lambda int_{B_ell} f^2``, which tends to 4 pi a as a/ell -> 0."""
    sol = solve_neumann(a, ell)
    shell = lambda r: 4.0 * math.pi * r * r * eval_f(sol, r) ** 2
    return sol.eigenvalue * _gauss_radial(shell, a, ell, n_points)


def brute_force_n3(a: float, ell: float, L: float, qmc_points: int = 1 << 17,
                   replicates: int = 8, chunk: int = 1 << 14) -> dict:
    """Energy per particle of three particles by scrambled-Sobol integration.

    Particle 1 sits at the origin; particles 2 and 3 range over the box
    (6 dimensions). Each replicate is a ratio estimate
    ``sum e |Psi|^2 / sum |Psi|^2``; the spread of the replicates gives the
    error bar.
    """
    if qmc_points < 100_000:
        raise ValueError("qmc_points must be at least 1e5")
    if 2.0 * ell > L:
        raise GeometryError(f"2*ell = {2 * ell} exceeds L = {L}")
    box = SimulationBox(L)
    if a == 0.0:
        zero = QuadratureResult(0.0, 0.0, qmc_points * replicates)
        return {"energy_per_particle": zero}
    sol = solve_neumann(a, ell)
    m = int(math.ceil(math.log2(qmc_points)))
    estimates = []
    for rep in range(replicates):
        sobol = qmc.Sobol(d=6, scramble=True, seed=rep)
        pts = sobol.random_base2(m)
        num = 0.0
        den = 0.0
        for start in range(0, len(pts), chunk):
            u = pts[start : start + chunk]
            X = np.zeros((len(u), 3, 3))
            X[:, 1, :] = L * (u[:, :3] - 0.5)
            X[:, 2, :] = L * (u[:, 3:] - 0.5)
            w = _psi_squared(X, box, sol)
            ok = w > 0
            two, three = local_energy_batch(X[ok], box, sol)
            num += float(np.sum(w[ok] * (two - three)))
            den += float(np.sum(w))
        estimates.append(num / den / 3.0)
    est = np.array(estimates)
    result = QuadratureResult(float(est.mean()), float(est.std(ddof=1) / math.sqrt(replicates)),
                              len(est) * (1 << m))
    return {"energy_per_particle": result}


def _psi_squared(X, box: SimulationBox, sol: ScatteringSolution) -> np.ndarray:
    n = X.shape[1]
    w = np.ones(X.shape[0])
    for i, j in itertools.combinations(range(n), 2):
        r = torus_distance_bruteforce(X[:, i], X[:, j], box.side_length)
        w *= eval_f(sol, r) ** 2
    return w


@dataclass(frozen=True)
class ShootingResult:
    r: np.ndarray
    f: np.ndarray
    f_prime: np.ndarray
    residual: float

    def normalized(self) -> np.ndarray:
        """Table of f rescaled so that f(ell) = 1."""
        return self.f / self.f[-1]


def ode_shooting_f(a: float, ell: float, lam: float, n_steps: int = 2000) -> ShootingResult:
    """Integrate ``-(r f)'' = lam (r f)`` from ``f(a) = 0, f'(a) = 1`` by RK4.

    ``residual`` is ``f'(ell)``, which vanishes at the Neumann eigenvalue.
    """
    if not lam > 0:
        raise ValueError("trial eigenvalue must be positive")
    h = (ell - a) / n_steps
    r = a + h * np.arange(n_steps + 1)
    g = np.empty(n_steps + 1)
    gp = np.empty(n_steps + 1)
    g[0], gp[0] = 0.0, a  # g = r f, g' = f + r f'
    y0, y1 = 0.0, a
    for i in range(n_steps):
        k1a, k1b = y1, -lam * y0
        k2a, k2b = y1 + 0.5 * h * k1b, -lam * (y0 + 0.5 * h * k1a)
        k3a, k3b = y1 + 0.5 * h * k2b, -lam * (y0 + 0.5 * h * k2a)
        k4a, k4b = y1 + h * k3b, -lam * (y0 + h * k3a)
        y0 = y0 + h * (k1a + 2 * k2a + 2 * k3a + k4a) / 6.0
        y1 = y1 + h * (k1b + 2 * k2b + 2 * k3b + k4b) / 6.0
        g[i + 1], gp[i + 1] = y0, y1
    f = g / r
    fp = (gp - f) / r
    return ShootingResult(r=r, f=f, f_prime=fp, residual=float(fp[-1]))


def torus_distance_bruteforce(x, y, L: float):
    """Distance minimised explicitly over the 27 neighbouring images."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return np.sqrt(np.sum(min_image_bruteforce(x, y, L) ** 2, axis=-1))


def _wrap_into_box(x, L):
    w = x - L * np.floor((x + 0.5 * L) / L)
    return np.where(w >= 0.5 * L, w - L, w)


def min_image_bruteforce(x, y, L: float):
    """Shortest of ``x - y + n L`` over ``n in {-1, 0, 1}^3`` (points wrapped first)."""
    d0 = _wrap_into_box(np.asarray(x, dtype=np.float64), L) - _wrap_into_box(
        np.asarray(y, dtype=np.float64), L)
    best = None
    best_norm = None
    for shift in itertools.product((-1.0, 0.0, 1.0), repeat=3):
        cand = d0 + np.array(shift) * L
        norm = np.sum(cand * cand, axis=-1)
        if best is None:
            best, best_norm = cand, norm
        else:
            better = norm < best_norm
            best = np.where(better[..., None], cand, best)
            best_norm = np.where(better, norm, best_norm)
    return best


def log_weight_reference(positions, L: float, sol: ScatteringSolution):
    """``sum_{i<j} 2 ln f`` over 27-image distances.

    ``positions`` may be a single ``(N, 3)`` configuration or a batch
    ``(B, N, 3)``; overlapping configurations give ``-inf``.
    """
    X = np.asarray(positions, dtype=np.float64)
    single = X.ndim == 2
    if single:
        X = X[None]
    n = X.shape[1]
    if n < 2:
        out = np.zeros(X.shape[0])
        return float(out[0]) if single else out
    i, j = np.triu_indices(n, k=1)
    r = torus_distance_bruteforce(X[:, i], X[:, j], L)
    f = eval_f(sol, r)
    with np.errstate(divide="ignore"):
        out = np.sum(2.0 * np.log(f), axis=1)
    return float(out[0]) if single else out


def local_energy_naive(positions, L: float, sol: ScatteringSolution) -> tuple[float, float]:
    """``(two_body, three_body)`` by the explicit triple loop over (j, i, m)."""
    X = np.asarray(positions, dtype=np.float64)
    n = len(X)
    eta = np.zeros((n, n, 3))
    two = 0.0
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            d = min_image_bruteforce(X[j], X[i], L)
            r = float(np.sqrt(d @ d))
            if r <= sol.range:
                two += sol.eigenvalue
                eta[j, i] = float(eval_f_prime(sol, r)) / float(eval_f(sol, r)) * d / r
    three = 0.0
    for j in range(n):
        for i in range(n):
            for m in range(n):
                if i != j and m != j and i != m:
                    three += float(eta[j, i] @ eta[j, m])
    return two, three


def laplacian_fd(positions, L: float, sol: ScatteringSolution, h: float) -> float:
    """``-sum_j Laplace_j Psi / Psi`` by central differences of ``exp(log_weight / 2)``.

    Only the pair terms of the displaced particle change, so the log-weight
    difference is accumulated pair by pair to keep round-off below the
    O(h^2) truncation error.
    """
    X = np.asarray(positions, dtype=np.float64)
    n = len(X)
    acc = 0.0
    for p in range(n):
        others = np.delete(X, p, axis=0)
        base = np.log(eval_f(sol, torus_distance_bruteforce(X[p], others, L)))
        for c in range(3):
            for sgn in (1.0, -1.0):
                xp = X[p].copy()
                xp[c] += sgn * h
                moved = np.log(eval_f(sol, torus_distance_bruteforce(xp, others, L)))
                acc += math.expm1(float(np.sum(moved - base)))
    return -acc / (h * h)


def alpha_enumerate(k: int, M: int, N: int) -> int:
    """alpha_k by recursive enumeration of every admissible tuple (m_1..m_{k-1})."""

    def rec(j, partial, weight):
        if j == k:
            return weight if partial == k - 2 else 0
        total = 0
        for m in range(0, M - partial + 1):
            s = partial + m
            if s > k - 2:
                break  # partial sums never decrease
            if 2 <= j <= k - 2 and s < j - 1:
                continue
            term = (-1) ** m * comb(N - 2 - partial, m)
            total += rec(j + 1, s, weight * term)
        return total

    return rec(1, 0, 1)


def elementary_symmetric_newton(values) -> np.ndarray:
    """e_0..e_n through Newton's identities from power sums."""
    v = np.asarray(values, dtype=np.float64).ravel()
    n = len(v)
    p = [float(np.sum(v**q)) for q in range(n + 1)]
    e = np.zeros(n + 1)
    e[0] = 1.0
    for m in range(1, n + 1):
        e[m] = sum((-1) ** (q - 1) * e[m - q] * p[q] for q in range(1, m + 1)) / m
    return e


def elementary_symmetric_subsets(values) -> np.ndarray:
    """e_0..e_n by summing products over explicit subsets (small inputs only)."""
    v = [float(x) for x in np.asarray(values).ravel()]
    e = np.zeros(len(v) + 1)
    for m in range(len(v) + 1):
        e[m] = sum(math.prod(c) for c in itertools.combinations(v, m))
    return e


def pair_distance_law(a: float, ell: float, L: float, edges) -> np.ndarray:
    """Probability of the N = 2 torus distance landing in each bin.

    ``edges`` must lie in ``[0, L/2]``; the mass beyond ``L/2`` (where f = 1 and
    the shell is clipped by the cube) is returned as a final extra entry.
    """
    sol = solve_neumann(a, ell)
    edges = np.asarray(edges, dtype=np.float64)
    if edges[0] < 0 or edges[-1] > 0.5 * L + 1e-12:
        raise ValueError("bin edges must lie within [0, L/2]")
    mass = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        # split at a and ell where f has kinks
        pts = sorted({lo, hi, *(p for p in (a, ell) if lo < p < hi)})
        m = 0.0
        for s0, s1 in zip(pts[:-1], pts[1:]):
            m += _gauss_radial(lambda r: 4 * math.pi * r * r * eval_f(sol, r) ** 2, s0, s1, 64)
        mass.append(m)
    outer_inner = 4.0 * math.pi * (0.5 * L) ** 3 / 3.0
    mass.append(L**3 - outer_inner)
    mass = np.array(mass)
    inner_total = sum(
        _gauss_radial(lambda r: 4 * math.pi * r * r * eval_f(sol, r) ** 2, s0, s1, 64)
        for s0, s1 in zip([0.0, a, ell], [a, ell, 0.5 * L])
    )
    return mass / (inner_total + L**3 - outer_inner)
