"""Variational Monte Carlo for hard-sphere Bose gases with a Jastrow trial state."""
from .cluster import (ClusterCoefficient, ErrorBudget, TruncationResult, alpha_coefficient,
                      elementary_symmetric, error_budget, lhy_constant, smallest_even_order,
                      truncation_check)
from .errors import (ConfigError, DomainError, GeometryError, HsvmcError, InsufficientData,
                     NoBracket, NonConvergence, OverlapError, PackingError)
from .experiments import (ExponentFit, SweepConfig, SweepRow, fit_exponent, fit_power_law,
                          format_rows, read_rows, run_sweep, write_rows)
from .geometry import SimulationBox, min_image_displacement, torus_distance, wrap_displacement
from .jastrow import Configuration, LocalEnergy, local_energy, local_energy_batch, log_weight
from .sampler import (ChainParams, EnergyEstimate, RatioEstimate, init_configuration,
                      merge_estimates, metropolis_sweep, run_chain, run_chains, widom_ratio)
from .scattering import (ScatteringSolution, UNorms, eval_f, eval_f_prime, omega,
                         solve_neumann, u, u_norms)

__version__ = "0.1.0"
