"""
CLI Command: Run a GBDT configuration

Builds the seed named in a run configuration and executes one command for one
system, writing CSV and JSON artifacts under the output directory.

Usage:
    python -m gbdt.commands.run --config <path> [options]

Options:
    --config PATH       Run configuration (YAML or JSON)
    --out PATH          Output directory (overrides the configuration)
    --tol FLOAT         Limit on max residual / h**2 used by verify
    --grid SPEC         Grid "x0,x1,nx" or "x0,x1,nx,t0,t1,nt"
    --seed-check-only   Validate the seed and stop
    --log-level LEVEL   DEBUG, INFO, WARNING or ERROR

Exit codes:
    0 success, 2 invalid seed or configuration, 3 numerical failure,
    4 verification failure

Examples:
    # Bounded-state soliton potential of a self-adjoint Dirac system
    python -m gbdt.commands.run --config examples_configs/dirac_sa_single.yaml

    # Same seed on a denser grid, output elsewhere
    python -m gbdt.commands.run --config examples_configs/dirac_sa_single.yaml \\
        --grid 0,8,801 --out out/dense

    # Check that a constructed N-wave solution satisfies its equation
    python -m gbdt.commands.run --config examples_configs/nwave_verify.yaml --tol 50

Environment:
    GBDT_THREADS        worker threads for grid sampling (default 1)
    GBDT_LOG_FILE       also log to this rotating file
"""

import argparse
import logging
import sys
from pathlib import Path

import yaml
from pydantic import ValidationError

from ..config import settings
from ..main import EXIT_VALIDATION, run, setup_logging
from ..models import GridSpec, RunConfig

logger = logging.getLogger(__name__)


def load_config(path: str | Path) -> RunConfig:
    """Parse a YAML or JSON run configuration."""
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    return RunConfig.model_validate(data)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gbdt",
        description="Explicit Backlund-Darboux constructions for integrable systems",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    parser.add_argument("--config", required=True, help="Path to the run configuration")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--tol", type=float, help="Limit on max residual / h**2 for verify")
    parser.add_argument("--grid", help='Grid override, e.g. "0,5,101" or "-2,2,81,0,1,41"')
    parser.add_argument("--seed-check-only", action="store_true", help="Validate the seed and exit")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Log level")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        settings.log_level = args.log_level
    setup_logging()

    try:
        config = load_config(args.config)
        updates = {}
        if args.out:
            updates["output"] = args.out
        if args.grid:
            updates["grid"] = GridSpec.parse(args.grid)
        if updates:
            config = RunConfig.model_validate({**config.model_dump(), **updates})
    except FileNotFoundError as e:
        logger.error(f"Config file not found: {e.filename}")
        return EXIT_VALIDATION
    except (ValidationError, ValueError, yaml.YAMLError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_VALIDATION

    print("=" * 60)
    print(f"System: {config.system}")
    print(f"Command: {config.command}")
    if config.grid is not None:
        print(f"Grid: {config.grid.model_dump(exclude_none=True)}")
    print(f"Output: {config.output}")
    print("=" * 60)

    code = run(config, tol_override=args.tol, seed_check_only=args.seed_check_only)
    print(f"Exit code: {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
