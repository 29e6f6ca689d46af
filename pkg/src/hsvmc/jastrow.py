"""Trial-state weight and exact local energy of the Jastrow product state."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import OverlapError
from .geometry import SimulationBox, wrap_displacement
from .scattering import ScatteringSolution, eval_f, eval_f_prime


class Configuration:
    """Particle positions on the torus plus a cell list with cell side >= cutoff.

    Positions are stored wrapped into ``[-L/2, L/2)^3``. The cell list is
    rebuilt by :meth:`set_positions` and kept current by the sampler.
    """

    def __init__(self, positions, box: SimulationBox, cutoff: float):
        self.box = box
        self.cutoff = float(cutoff)
        pos = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        n = pos.shape[0]
        L = box.side_length
        self.n_cells = int(math.floor(L / self.cutoff)) if self.cutoff > 0 else 0
        if self.n_cells < 3:
            self.n_cells = 1
        self.head = np.full(self.n_cells**3, -1, dtype=np.int64)
        self.next = np.full(n, -1, dtype=np.int64)
        self.prev = np.full(n, -1, dtype=np.int64)
        self.cell_of = np.zeros(n, dtype=np.int64)
        self.positions = np.empty((n, 3), dtype=np.float64)
        self.set_positions(pos)

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def cell_side(self) -> float:
        return self.box.side_length / self.n_cells

    def set_positions(self, positions) -> None:
        self.positions[:] = self.box.wrap(positions)
        K.build_cells(self.positions, self.box.side_length, self.n_cells,
                      self.head, self.next, self.prev, self.cell_of)

    def copy(self) -> "Configuration":
        return Configuration(self.positions.copy(), self.box, self.cutoff)

    def neighbor_pairs(self, cutoff: float | None = None):
        """Index arrays ``(i, j)``, ``i < j``, of pairs at torus distance <= cutoff."""
        cutoff = self.cutoff if cutoff is None else cutoff
        if cutoff > self.cutoff:
            raise ValueError("cutoff exceeds the cell-list range")
        return K.pair_list(self.positions, self.box.side_length, self.n_cells,
                           self.head, self.next, cutoff)

    def _kernel_args(self):
        return (self.positions, self.box.side_length, self.n_cells, self.head, self.next)


def _checked(config: Configuration, sol: ScatteringSolution) -> Configuration:
    config.box.check_range(sol.range)
    if sol.range > config.cutoff:
        config = Configuration(config.positions, config.box, sol.range)
    return config


def log_weight(config: Configuration, sol: ScatteringSolution) -> float:
    """``ln |Psi|^2 = sum_{i<j} 2 ln f(r_ij)``; ``-inf`` on a hard-core overlap."""
    config = _checked(config, sol)
    return float(K.log_weight(*config._kernel_args(), *sol.kernel_params))


@dataclass(frozen=True)
class LocalEnergy:
    two_body: float
    three_body: float
    total: float
    overlap: bool = False


def local_energy(config: Configuration, sol: ScatteringSolution) -> LocalEnergy:
    """``sum_j (-Laplace_j Psi)/Psi`` at one configuration.

    ``two_body`` is lambda times the ordered count of pairs within ell;
    ``three_body`` is the gradient cross term, reduced to O(N^2) through
    ``sum_{i != m} eta_i . eta_m = |sum_i eta_i|^2 - sum_i |eta_i|^2``.
    """
    config = _checked(config, sol)
    count, three, overlap = K.local_energy(*config._kernel_args(), *sol.kernel_params)
    if overlap:
        raise OverlapError("local energy requested on an overlapping configuration")
    two = sol.eigenvalue * count
    return LocalEnergy(two_body=two, three_body=float(three), total=two - float(three))


def local_energy_batch(positions, box: SimulationBox, sol: ScatteringSolution):
    """Vectorised local energy over many small configurations.

    ``positions`` has shape ``(M, N, 3)``; returns ``(two_body, three_body)``
    arrays of shape ``(M,)``. Overlapping samples get NaN. Intended for small N
    (dense all-pairs evaluation).
    """
    X = np.asarray(positions, dtype=np.float64)
    d = wrap_displacement(X[:, :, None, :] - X[:, None, :, :], box.side_length)
    r = np.sqrt(np.sum(d * d, axis=-1))
    n = X.shape[1]
    off = ~np.eye(n, dtype=bool)[None, :, :]
    inside = (r <= sol.range) & off
    f = np.where(off, eval_f(sol, r), 1.0)
    fp = eval_f_prime(sol, np.where(inside, r, sol.range))
    overlap = np.any((f < K.F_FLOOR) & off, axis=(1, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(inside & ~(f < K.F_FLOOR), fp / (f * r), 0.0)
    eta = g[..., None] * d
    # explicit cross terms (small N): a lone pair contributes exactly zero
    cross = np.einsum("bjic,bjmc->bjim", eta, eta)
    cross = np.where(~np.eye(n, dtype=bool)[None, None], cross, 0.0)
    three = cross.sum(axis=(1, 2, 3))
    two = sol.eigenvalue * inside.sum(axis=(1, 2))
    two = np.where(overlap, np.nan, two)
    three = np.where(overlap, np.nan, three)
    return two, three
