"""Command-line entry point: density sweeps and the self-test."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import ConfigError
from .experiments import (SweepConfig, config_from_mapping, format_rows,
                          parse_config_text, run_sweep)

EXIT_OK, EXIT_ROW_FAILURE, EXIT_CONFIG = 0, 1, 2

# flag dest -> config key
_FLAG_KEYS = {
    "density": "densities", "n": "N", "epsilon": "epsilon", "ell": "ell_override",
    "chains": "chains", "sweeps": "sweeps", "burn_in": "burn_in",
    "block_size": "block_size", "seed": "seed", "out": "output_path",
    "format": "format", "core_radius": "core_radius", "insertions": "insertions",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hsvmc",
        description="Variational Monte Carlo sweeps for the hard-sphere Bose gas.",
    )
    p.add_argument("--config", type=Path, help="key = value file; flags override it")
    p.add_argument("--density", type=float, action="append",
                   help="gas parameter rho a^3 (repeatable)")
    p.add_argument("--n", type=int, help="particles per box (default 100)")
    p.add_argument("--epsilon", type=float, help="range exponent (default 0.1)")
    p.add_argument("--ell", type=float, help="override the interaction range")
    p.add_argument("--chains", type=int)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--block-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--core-radius", type=float, help="hard-core radius a (default 1)")
    p.add_argument("--insertions", type=int, help="test particles per sweep for the insertion ratio")
    p.add_argument("--selftest", action="store_true", help="run the oracle checks and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args: argparse.Namespace) -> SweepConfig:
    values: dict = {}
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from None
        values.update(parse_config_text(text))
    for dest, key in _FLAG_KEYS.items():
        v = getattr(args, dest)
        if v is None:
            continue
        values.pop({"densities": "density", "N": "n", "ell_override": "ell",
                    "output_path": "out"}.get(key, key), None)
        values[key] = v
    return config_from_mapping(values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.selftest:
        from .selftest import run_all
        results = run_all()
        failed = sum(not r.passed for r in results)
        print(f"{len(results) - failed}/{len(results)} checks passed")
        return EXIT_OK if failed == 0 else EXIT_ROW_FAILURE
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = run_sweep(config)
    text = format_rows(rows, config.format)
    if config.output_path:
        Path(config.output_path).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_ROW_FAILURE if any(r.failed for r in rows) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
