"""Exact expansion coefficients, truncation sandwiches and the error budget."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np

from .errors import DomainError, OverlapError
from .geometry import min_image_displacement
from .jastrow import Configuration
from .scattering import ScatteringSolution, eval_f


@dataclass(frozen=True)
class ClusterCoefficient:
    k: int
    M: int
    N: int
    value: int
    method: str = "transfer over partial sums"
    terms: int = 0


def alpha_coefficient(k: int, M: int, N: int) -> ClusterCoefficient:
    """Tree coefficient alpha_k for truncation order M and N particles.

    Sum over ``(m_1, ..., m_{k-1})`` with ``m_j <= M - (m_1 + ... + m_{j-1})``
    of ``prod_j (-1)^{m_j} C(N - 2 - m_1 - ... - m_{j-1}, m_j)``, restricted to
    partial sums ``S_j >= j - 1`` for ``2 <= j <= k-2`` and ``S_{k-1} = k - 2``.

    Evaluated as a transfer over the running partial sum ``S``: the weight of
    each step depends only on ``S``, so the nested sum collapses to a
    ``(k-1) x (k-1)`` dynamic programme in exact integers.
    """
    if k < 3:
        raise DomainError(f"alpha_k needs k >= 3, got {k}")
    if k > M + 2:
        raise DomainError(f"alpha_k needs k <= M + 2, got k={k}, M={M}")
    if N < k:
        raise DomainError(f"alpha_k needs N >= k, got N={N}, k={k}")
    target = k - 2
    # weights[S] = signed sum over prefixes ending at partial sum S
    weights = {0: 1}
    terms = 0
    for j in range(1, k):
        nxt: dict[int, int] = {}
        for s, w in weights.items():
            for m in range(0, min(M - s, target - s) + 1):
                s_new = s + m
                terms += 1
                nxt[s_new] = nxt.get(s_new, 0) + w * (-1) ** m * comb(N - 2 - s, m)
        if 2 <= j <= k - 2:
            nxt = {s: w for s, w in nxt.items() if s >= j - 1}
        weights = nxt
    return ClusterCoefficient(k=k, M=M, N=N, value=weights.get(target, 0), terms=terms)


def elementary_symmetric(values) -> np.ndarray:
    """``e_0 .. e_n`` of ``values`` via the product recurrence of prod(1 + v t)."""
    v = np.asarray(values, dtype=np.float64).ravel()
    e = np.zeros(len(v) + 1)
    e[0] = 1.0
    for i, x in enumerate(v):
        e[1 : i + 2] = e[1 : i + 2] + x * e[: i + 1]
    return e


@dataclass(frozen=True)
class TruncationResult:
    partial_sums: list
    full_product: float
    u_values: np.ndarray = field(repr=False)

    def sandwich_holds(self, slack: float = 1e-12) -> bool:
        """Even partial sums lie above the product, odd ones below it."""
        p = self.full_product
        for m, s in enumerate(self.partial_sums):
            if m % 2 == 0 and s < p - slack:
                return False
            if m % 2 == 1 and s > p + slack:
                return False
        return True


def truncation_check(config: Configuration, sol: ScatteringSolution, i: int,
                     k: int) -> TruncationResult:
    """Row ``i`` of the alternating expansion of ``prod_{j>i} f_ij^2``.

    Returns ``S_m = sum_{q<=m} (-1)^q e_q(u_{i,i+1}, ..., u_{i,N})`` for
    ``m = 0..k`` together with the exact product.
    """
    n = config.n_particles
    if not 0 <= i < n:
        raise IndexError(f"particle index {i} out of range")
    if k > n - 1 - i:
        raise ValueError(f"order k={k} exceeds the {n - 1 - i} partners of row {i}")
    pos = config.positions
    d = min_image_displacement(pos[i + 1 :], pos[i], config.box)
    r = np.sqrt(np.sum(d * d, axis=1))
    f = np.asarray(eval_f(sol, r), dtype=np.float64).ravel()
    if np.any(f < 1e-30):
        raise OverlapError(f"particle {i} overlaps a partner")
    uvals = 1.0 - f * f
    e = elementary_symmetric(uvals)
    signs = (-1.0) ** np.arange(k + 1)
    partial = np.cumsum(signs * e[: k + 1]).tolist()
    return TruncationResult(partial_sums=partial, full_product=float(np.prod(f * f)),
                            u_values=uvals)


@dataclass(frozen=True)
class ErrorBudget:
    rho: float
    a: float
    epsilon: float
    M: int
    ell: float
    terms: dict

    @property
    def gas_parameter(self) -> float:
        return self.rho * self.a**3


def smallest_even_order(epsilon: float) -> int:
    """Smallest even M with ``M - 1 > 1 / (4 epsilon)``."""
    bound = 1.0 / (4.0 * epsilon)
    M = 2
    while not (M - 1 > bound):
        M += 2
    return M


def error_budget(rho: float, a: float, epsilon: float,
                 M_override: Optional[int] = None) -> ErrorBudget:
    """Range ``ell = (rho a)^(-1/2) (rho a^3)^epsilon`` and the scales it controls."""
    if not (rho > 0 and a > 0):
        raise DomainError("rho and a must be positive")
    gas = rho * a**3
    if not (0.0 < gas <= 1e-2):
        raise DomainError(f"rho a^3 = {gas} outside (0, 1e-2]")
    if not (0.0 < epsilon < 0.25):
        raise DomainError(f"epsilon = {epsilon} outside (0, 1/4)")
    ell = (rho * a) ** -0.5 * gas**epsilon
    small = rho * a * ell * ell
    expected = gas ** (2.0 * epsilon)
    if abs(small - expected) > 1e-12 * expected:
        raise ArithmeticError("rho a ell^2 != (rho a^3)^(2 epsilon)")
    M = smallest_even_order(epsilon) if M_override is None else int(M_override)
    terms = {
        "truncation": small ** (M - 1),
        "loops": rho * a * a * ell,
        "scattering": a / ell,
        "two_body_total": gas ** (0.5 - epsilon),
        "three_body_total": gas ** (0.5 + epsilon),
    }
    return ErrorBudget(rho=rho, a=a, epsilon=epsilon, M=M, ell=ell, terms=terms)


def alpha_bound(k: int, M: int, N: int) -> int:
    """Crude combinatorial bound ``(M+1)^(k-1) N^(k-2)`` on ``|alpha_k|``."""
    return (M + 1) ** (k - 1) * N ** (k - 2)


def lhy_constant() -> float:
    return 128.0 / (15.0 * math.sqrt(math.pi))
