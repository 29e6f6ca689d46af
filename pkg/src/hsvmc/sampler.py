"""Metropolis sampling of |Psi_N|^2, blocked error bars and Widom insertion."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels as K
from . import rng
from .errors import PackingError
from .geometry import SimulationBox
from .jastrow import Configuration
from .scattering import ScatteringSolution

logger = logging.getLogger(__name__)

TARGET_ACCEPTANCE = 0.5
ACCEPTANCE_BAND = (0.2, 0.8)
TUNE_INTERVAL = 10


@dataclass(frozen=True)
class ChainParams:
    N: int
    box: SimulationBox
    sol: ScatteringSolution
    step_size: float
    burn_in: int
    sweeps: int
    block_size: int
    seed: int
    chain_id: int = 0
    tune_step: bool = True

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.block_size < 1:
            raise ValueError("block_size must be at least 1")
        if self.sweeps < 10 * self.block_size:
            raise ValueError("sweeps must be at least 10 * block_size")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        self.box.check_range(self.sol.range)


@dataclass
class EnergyEstimate:
    """Energy per particle from one chain or a merge of several.

    ``mean_per_particle`` is defined as ``two_body_mean - three_body_mean``.
    """

    mean_per_particle: float
    stderr: float
    two_body_mean: float
    three_body_mean: float
    acceptance_rate: float
    n_blocks: int
    block_size: int
    step_size: float
    stderr_doubled: float
    acceptance_warning: bool
    block_means: np.ndarray = field(repr=False)
    two_body_blocks: np.ndarray = field(repr=False)
    three_body_blocks: np.ndarray = field(repr=False)

    @property
    def blocking_consistent(self) -> bool:
        """Doubling the block length did not grow the error bar by more than 50%."""
        if self.stderr == 0.0:
            return self.stderr_doubled == 0.0
        return self.stderr_doubled <= 1.5 * self.stderr


@dataclass(frozen=True)
class RatioEstimate:
    """Estimate of ``I_N / (|Lambda| I_{N-1})`` by particle insertion."""

    ratio: float
    stderr: float
    n_blocks: int


def block_average(samples: np.ndarray, block_size: int) -> np.ndarray:
    n_blocks = len(samples) // block_size
    return samples[: n_blocks * block_size].reshape(n_blocks, block_size).mean(axis=1)


def _stderr(block_means: np.ndarray) -> float:
    n = len(block_means)
    if n < 2:
        return float("nan")
    return float(np.std(block_means, ddof=1) / math.sqrt(n))


def _doubled_stderr(block_means: np.ndarray) -> float:
    n = len(block_means) // 2
    if n < 2:
        return float("nan")
    return _stderr(block_means[: 2 * n].reshape(n, 2).mean(axis=1))


def init_configuration(params: ChainParams) -> Configuration:
    """Jittered simple-cubic start with spacing ``L / ceil(N^(1/3))``."""
    box, N, a = params.box, params.N, params.sol.core_radius
    L = box.side_length
    if N * (4.0 * math.pi * a**3 / 3.0) >= 0.3 * box.volume:
        raise PackingError(f"N={N} hard spheres of radius {a} too dense for L={L}")
    n_side = 1
    while n_side**3 < N:
        n_side += 1
    spacing = L / n_side
    if spacing <= a:
        raise PackingError(f"lattice spacing {spacing} not above core radius {a}")
    idx = np.arange(N)
    grid = np.stack([idx // (n_side * n_side), (idx // n_side) % n_side, idx % n_side], axis=1)
    sites = (grid + 0.5) * spacing - 0.5 * L
    jitter = min(0.05 * spacing, (spacing - a) / (4.0 * math.sqrt(3.0)))
    noise = rng.uniform_block(params.seed, params.chain_id, rng.INIT, 0, (N, 3))
    config = Configuration(sites + jitter * (2.0 * noise - 1.0), box, params.sol.range)
    if K.log_weight(*config._kernel_args(), *params.sol.kernel_params) == -np.inf:
        raise PackingError("initial configuration overlaps")
    return config


def metropolis_sweep(config: Configuration, params: ChainParams, rand: np.ndarray,
                     step: Optional[float] = None) -> tuple[Configuration, int]:
    """N single-particle moves; ``rand`` is an ``(N, 4)`` block of uniforms.

    Columns 0-2 give the cube displacement, column 3 the acceptance draw.
    The configuration is updated in place.
    """
    step = params.step_size if step is None else step
    rand = np.ascontiguousarray(rand, dtype=np.float64)
    accepted = K.sweep(config.positions, config.box.side_length, config.n_cells,
                       config.head, config.next, config.prev, config.cell_of,
                       *params.sol.kernel_params, rand, step)
    return config, int(accepted)


def acceptance_probability(config: Configuration, sol: ScatteringSolution, p: int,
                           new_position) -> float:
    """Metropolis acceptance for moving particle ``p`` to ``new_position``."""
    x, y, z = config.box.wrap(new_position)
    buf = np.empty(config.n_particles, dtype=np.int64)
    dlw = K.delta_log_weight(config.positions, p, x, y, z, config.box.side_length,
                             config.n_cells, config.head, config.next,
                             *sol.kernel_params, buf)
    if dlw == -np.inf:
        return 0.0
    return min(1.0, math.exp(dlw))


def _burn_in(config: Configuration, params: ChainParams) -> float:
    step = params.step_size
    cap = 0.5 * params.box.side_length
    window = 0
    for s in range(params.burn_in):
        rand = rng.uniform_block(params.seed, params.chain_id, rng.BURN_IN, s, (params.N, 4))
        _, acc = metropolis_sweep(config, params, rand, step)
        window += acc
        if params.tune_step and (s + 1) % TUNE_INTERVAL == 0:
            rate = window / (TUNE_INTERVAL * params.N)
            step = min(cap, step * min(2.0, max(0.5, rate / TARGET_ACCEPTANCE)))
            window = 0
    return step


def run_chain(params: ChainParams,
              observer: Optional[Callable[[Configuration, int], None]] = None) -> EnergyEstimate:
    """Burn in (tuning the step), then average the local energy per particle.

    The step size is frozen after burn-in. ``observer(config, sweep)`` is
    called after every measurement sweep.
    """
    config = init_configuration(params)
    step = _burn_in(config, params)
    lam = params.sol.eigenvalue
    two = np.empty(params.sweeps)
    three = np.empty(params.sweeps)
    accepted = 0
    kp = params.sol.kernel_params
    for s in range(params.sweeps):
        rand = rng.uniform_block(params.seed, params.chain_id, rng.MEASURE, s, (params.N, 4))
        _, acc = metropolis_sweep(config, params, rand, step)
        accepted += acc
        count, tb, overlap = K.local_energy(*config._kernel_args(), *kp)
        if overlap:
            raise RuntimeError("sampler reached an overlapping configuration")
        two[s] = lam * count
        three[s] = tb
        if observer is not None:
            observer(config, s)

    two /= params.N
    three /= params.N
    two_blocks = block_average(two, params.block_size)
    three_blocks = block_average(three, params.block_size)
    total_blocks = two_blocks - three_blocks
    rate = accepted / (params.sweeps * params.N)
    warn = not (ACCEPTANCE_BAND[0] <= rate <= ACCEPTANCE_BAND[1])
    if warn:
        logger.info("chain %d: acceptance rate %.3f outside %s",
                    params.chain_id, rate, ACCEPTANCE_BAND)
    two_mean = float(np.mean(two_blocks))
    three_mean = float(np.mean(three_blocks))
    return EnergyEstimate(
        mean_per_particle=two_mean - three_mean,
        stderr=_stderr(total_blocks),
        two_body_mean=two_mean,
        three_body_mean=three_mean,
        acceptance_rate=rate,
        n_blocks=len(total_blocks),
        block_size=params.block_size,
        step_size=step,
        stderr_doubled=_doubled_stderr(total_blocks),
        acceptance_warning=warn,
        block_means=total_blocks,
        two_body_blocks=two_blocks,
        three_body_blocks=three_blocks,
    )


def merge_estimates(estimates: Sequence[EnergyEstimate]) -> EnergyEstimate:
    """Pool the block means of several chains (in the given order)."""
    if not estimates:
        raise ValueError("nothing to merge")
    blocks = np.concatenate([e.block_means for e in estimates])
    two_blocks = np.concatenate([e.two_body_blocks for e in estimates])
    three_blocks = np.concatenate([e.three_body_blocks for e in estimates])
    weights = np.array([e.n_blocks for e in estimates], dtype=float)
    rate = float(np.dot(weights, [e.acceptance_rate for e in estimates]) / weights.sum())
    two_mean = float(np.mean(two_blocks))
    three_mean = float(np.mean(three_blocks))
    return EnergyEstimate(
        mean_per_particle=two_mean - three_mean,
        stderr=_stderr(blocks),
        two_body_mean=two_mean,
        three_body_mean=three_mean,
        acceptance_rate=rate,
        n_blocks=len(blocks),
        block_size=estimates[0].block_size,
        step_size=float(np.mean([e.step_size for e in estimates])),
        stderr_doubled=float(np.sqrt(np.mean([e.stderr_doubled**2 for e in estimates])
                                     / len(estimates))),
        acceptance_warning=any(e.acceptance_warning for e in estimates),
        block_means=blocks,
        two_body_blocks=two_blocks,
        three_body_blocks=three_blocks,
    )


def run_chains(params: ChainParams, chains: int, max_workers: Optional[int] = None) -> EnergyEstimate:
    """Independent chains with ids ``0..chains-1``, merged in id order."""
    plist = [replace(params, chain_id=c) for c in range(chains)]
    if chains == 1 or max_workers == 1:
        results = [run_chain(p) for p in plist]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run_chain, plist))
    return merge_estimates(results)


def widom_ratio(params: ChainParams, n_insertions: int = 64) -> RatioEstimate:
    """Insert a test particle into an (N-1)-particle chain.

    Averages ``prod_j f(|y - x_j|)^2`` over uniform points ``y`` drawn after
    every measurement sweep; the error bar comes from blocks of sweeps.
    """
    if n_insertions < 1:
        raise ValueError("n_insertions must be positive")
    if params.N == 1:
        return RatioEstimate(1.0, 0.0, 0)
    host = replace(params, N=params.N - 1)
    config = init_configuration(host)
    step = _burn_in(config, host)
    L = host.box.side_length
    kp = host.sol.kernel_params
    per_sweep = np.empty(host.sweeps)
    for s in range(host.sweeps):
        rand = rng.uniform_block(host.seed, host.chain_id, rng.MEASURE, s, (host.N, 4))
        metropolis_sweep(config, host, rand, step)
        ys = rng.uniform_block(host.seed, host.chain_id, rng.INSERT, s, (n_insertions, 3))
        ys = L * ys - 0.5 * L
        w = K.insertion_weights(*config._kernel_args(), ys, *kp)
        per_sweep[s] = np.mean(w)
    blocks = block_average(per_sweep, host.block_size)
    return RatioEstimate(float(np.mean(blocks)), _stderr(blocks), len(blocks))
