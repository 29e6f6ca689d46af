"""Density sweeps, output tables and exponent fits."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .cluster import error_budget, lhy_constant
from .errors import ConfigError, HsvmcError, InsufficientData
from .geometry import SimulationBox
from .sampler import ChainParams, run_chains, widom_ratio
from .scattering import solve_neumann

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "rho_a3", "ell_over_a", "N", "E_per_N", "stderr", "two_body", "three_body",
    "ratio_to_leading", "lhy_prediction", "acceptance", "widom_ratio", "status",
)
PROVENANCE_COLUMNS = ("epsilon", "M", "ell", "seed", "solver_residual", "widom_stderr")

# chain ids at or above this offset belong to insertion runs
WIDOM_CHAIN_OFFSET = 1 << 32


@dataclass
class SweepConfig:
    densities: Sequence[float]
    N: int = 100
    epsilon: float = 0.1
    ell_override: Optional[float] = None
    chains: int = 1
    sweeps: int = 4000
    burn_in: int = 200
    block_size: int = 100
    seed: int = 12345
    output_path: Optional[str] = None
    format: str = "csv"
    core_radius: float = 1.0
    insertions: int = 32

    def __post_init__(self):
        try:
            self.densities = tuple(sorted(float(d) for d in self.densities))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad density list: {exc}") from None
        if not self.densities or any(not d > 0 for d in self.densities):
            raise ConfigError("densities must be a non-empty list of positive numbers")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.N < 2 or self.chains < 1 or self.block_size < 1 or self.insertions < 1:
            raise ConfigError("N >= 2, chains >= 1, block_size >= 1, insertions >= 1 required")
        if self.sweeps < 10 * self.block_size:
            raise ConfigError("sweeps must be at least 10 * block_size")
        if self.core_radius < 0:
            raise ConfigError("core_radius must be non-negative")
        for d in self.densities:
            L, ell, _ = self.geometry(d)
            if 2.0 * ell > L:
                raise ConfigError(f"rho a^3 = {d}: 2*ell = {2 * ell:.4g} exceeds L = {L:.4g}")

    @property
    def length_unit(self) -> float:
        # the free-gas smoke run keeps unit lengths
        return self.core_radius if self.core_radius > 0 else 1.0

    def geometry(self, rho_a3: float):
        """``(L, ell, M)`` for one density."""
        a = self.length_unit
        rho = rho_a3 / a**3
        try:
            budget = error_budget(rho, a, self.epsilon)
        except HsvmcError as exc:
            raise ConfigError(str(exc)) from None
        ell = self.ell_override if self.ell_override is not None else budget.ell
        L = (self.N / rho) ** (1.0 / 3.0)
        return L, ell, budget.M


@dataclass
class SweepRow:
    rho_a3: float
    ell_over_a: float
    N: int
    E_per_N: float
    stderr: float
    two_body: float
    three_body: float
    ratio_to_leading: float
    lhy_prediction: float
    acceptance: float
    widom_ratio: float
    status: str
    epsilon: float = float("nan")
    M: int = 0
    ell: float = float("nan")
    seed: int = 0
    solver_residual: float = float("nan")
    widom_stderr: float = float("nan")

    @property
    def ratio_stderr(self) -> float:
        """Error bar on ``ratio_to_leading``."""
        if self.E_per_N == 0 or not math.isfinite(self.ratio_to_leading):
            return float("nan")
        return abs(self.stderr * self.ratio_to_leading / self.E_per_N)

    @property
    def failed(self) -> bool:
        return self.status.startswith("failed")


def lhy_prediction(rho_a3: float) -> float:
    return 1.0 + lhy_constant() * math.sqrt(rho_a3)


def row_seed(seed: int, rho_a3: float) -> int:
    """Per-row seed keyed on the density bits, so rows do not depend on their neighbours."""
    bits = int(np.float64(rho_a3).view(np.uint64))
    return int(np.random.SeedSequence([seed, bits]).generate_state(1, np.uint64)[0])


def run_row(config: SweepConfig, index: int, rho_a3: float) -> SweepRow:
    a = config.core_radius
    unit = config.length_unit
    rho = rho_a3 / unit**3
    L, ell, M = config.geometry(rho_a3)
    seed = row_seed(config.seed, rho_a3)
    base = dict(rho_a3=rho_a3, ell_over_a=ell / unit, N=config.N, epsilon=config.epsilon,
                M=M, ell=ell, seed=seed, lhy_prediction=lhy_prediction(rho_a3))
    try:
        sol = solve_neumann(a, ell)
        params = ChainParams(
            N=config.N, box=SimulationBox(L), sol=sol, step_size=0.1 * L,
            burn_in=config.burn_in, sweeps=config.sweeps, block_size=config.block_size,
            seed=seed,
        )
        est = run_chains(params, config.chains)
        widom = widom_ratio(
            ChainParams(**{**params.__dict__, "chain_id": WIDOM_CHAIN_OFFSET}),
            config.insertions,
        )
    except HsvmcError as exc:
        logger.error("row %d (rho a^3 = %g) failed: %s", index, rho_a3, exc)
        nan = float("nan")
        return SweepRow(E_per_N=nan, stderr=nan, two_body=nan, three_body=nan,
                        ratio_to_leading=nan, acceptance=nan, widom_ratio=nan,
                        status=f"failed:{type(exc).__name__}", **base)

    leading = 4.0 * math.pi * rho * a
    status = "ok"
    if leading > 0:
        ratio = est.mean_per_particle / leading
    else:
        ratio = float("nan")
        status = "undefined_ratio"
    if est.acceptance_warning:
        status += ";acceptance_out_of_band"
    if not est.blocking_consistent:
        status += ";blocking_unconverged"
    return SweepRow(
        E_per_N=est.mean_per_particle, stderr=est.stderr, two_body=est.two_body_mean,
        three_body=est.three_body_mean, ratio_to_leading=ratio,
        acceptance=est.acceptance_rate, widom_ratio=widom.ratio, status=status,
        solver_residual=sol.residual, widom_stderr=widom.stderr, **base,
    )


def run_sweep(config: SweepConfig) -> list[SweepRow]:
    """One row per density, in increasing density order."""
    rows = []
    for index, rho_a3 in enumerate(config.densities):
        logger.info("density %g (%d/%d)", rho_a3, index + 1, len(config.densities))
        rows.append(run_row(config, index, rho_a3))
    return rows


def _row_dict(row: SweepRow) -> dict:
    d = asdict(row)
    ordered = {k: d[k] for k in CSV_COLUMNS}
    ordered.update({k: d[k] for k in PROVENANCE_COLUMNS})
    return ordered


def format_rows(rows: Iterable[SweepRow], fmt: str = "csv") -> str:
    dicts = [_row_dict(r) for r in rows]
    if fmt == "json":
        # strict JSON has no NaN; undefined values become null
        clean = [{k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                  for k, v in d.items()} for d in dicts]
        return json.dumps(clean, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(CSV_COLUMNS + PROVENANCE_COLUMNS),
                            lineterminator="\n")
    writer.writeheader()
    for d in dicts:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in d.items()})
    return buf.getvalue()


def write_rows(rows: Sequence[SweepRow], path, fmt: str = "csv") -> None:
    Path(path).write_text(format_rows(rows, fmt))


def read_rows(path, fmt: Optional[str] = None) -> list[SweepRow]:
    text = Path(path).read_text()
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    if fmt == "json":
        records = json.loads(text)
    else:
        records = list(csv.DictReader(io.StringIO(text)))
    types = {f.name: f.type for f in fields(SweepRow)}
    out = []
    for rec in records:
        kwargs = {}
        for k, v in rec.items():
            t = types[k]
            if v is None:
                kwargs[k] = float("nan")
            elif t in ("int", int):
                kwargs[k] = int(v)
            elif t in ("str", str):
                kwargs[k] = str(v)
            else:
                kwargs[k] = float(v)
        out.append(SweepRow(**kwargs))
    return out


@dataclass(frozen=True)
class ExponentFit:
    C: float
    p: float
    residual: float
    n_rows: int


def fit_power_law(gas, excess) -> ExponentFit:
    """Least squares of ``log(excess)`` against ``log(gas)``."""
    x = np.log(np.asarray(gas, dtype=np.float64))
    y = np.log(np.asarray(excess, dtype=np.float64))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return ExponentFit(C=float(math.exp(coef[1])), p=float(coef[0]),
                       residual=float(np.linalg.norm(resid)), n_rows=len(x))


def fit_exponent(rows: Sequence[SweepRow]) -> ExponentFit:
    """Fit ``ratio_to_leading = 1 + C (rho a^3)^p`` on rows clearly above 1."""
    usable = [
        r for r in rows
        if math.isfinite(r.ratio_to_leading)
        and r.ratio_to_leading - 1.0 > 2.0 * (r.ratio_stderr if r.stderr > 0 else 0.0)
    ]
    if len(usable) < 3:
        raise InsufficientData(
            f"need 3 rows with ratio_to_leading > 1 beyond 2 sigma, have {len(usable)}")
    return fit_power_law([r.rho_a3 for r in usable],
                         [r.ratio_to_leading - 1.0 for r in usable])


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


_CONFIG_KEYS = {
    "densities": lambda v: [float(x) for x in v.replace(",", " ").split()],
    "density": lambda v: [float(x) for x in v.replace(",", " ").split()],
    "n": int, "N": int,
    "epsilon": float,
    "ell": float, "ell_override": float,
    "chains": int, "sweeps": int, "burn_in": int, "block_size": int,
    "seed": int,
    "out": str, "output_path": str,
    "format": str,
    "core_radius": float,
    "insertions": int,
}
_ALIASES = {"density": "densities", "n": "N", "ell": "ell_override", "out": "output_path"}


def config_from_mapping(values: dict) -> SweepConfig:
    kwargs = {}
    for key, raw in values.items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            val = _CONFIG_KEYS[key](raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
        kwargs[_ALIASES.get(key, key)] = val
    if "densities" not in kwargs:
        raise ConfigError("no densities given")
    try:
        return SweepConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
