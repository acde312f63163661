"""
GBDT Explicit - run dispatcher

Loads a run configuration, builds the seed for the requested system and
executes one command: construct, weyl, scatter, invert, verify or evolve.
Failures map to exit codes: validation 2, numerical 3, verification 4.
"""

import logging
from collections.abc import Callable
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from .config import Tolerances, settings, tolerances
from .core.matcore import fnorm
from .core.realization import Realization, evaluate
from .core.solution import SolutionGrid
from .errors import GbdtError, NumericalError, SeedValidationError, VerificationError
from .models import GridSpec, RunConfig
from .services.export import read_solution, write_json, write_solution
from .services.residuals import PdeKind, ResidualReport, field_report, ode_residual, pde_residual
from .systems import dirac, radial
from .systems.nonlinear import chiral, elliptic, nls, nwave

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_VERIFICATION = 4

# Spectral parameter used by the Darboux-property checks of linear systems
CHECK_LAMBDA = 0.7 + 0.4j

ROUND_TRIP_LIMIT = 1e-6


class MatrixFormatter(logging.Formatter):
    """Formatter that renders array arguments compactly before formatting."""

    def format(self, record: logging.LogRecord) -> str:
        if isinstance(record.args, tuple) and any(isinstance(a, np.ndarray) for a in record.args):
            record = logging.makeLogRecord(record.__dict__)
            record.args = tuple(_compact(a) for a in record.args)
        return super().format(record)


def _compact(value: Any) -> Any:
    if not isinstance(value, np.ndarray):
        return value
    if value.size > 16:
        return f"<array {value.shape} |.|={float(np.linalg.norm(value)):.3e}>"
    return np.array2string(value, precision=4, suppress_small=True, max_line_width=200).replace("\n", "")


_configured = False


def setup_logging() -> None:
    """Configure the root logger once: console handler plus an optional rotating file."""
    global _configured
    if _configured:
        return
    log_level = getattr(logging, settings.log_level.upper())
    formatter = MatrixFormatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if settings.log_file:
        log_path = Path(settings.log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(
            log_path,
            maxBytes=10 * 1024 * 1024,  # 10MB per file
            backupCount=5,
            encoding="utf-8",
        )
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)
    _configured = True


# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------

DIRAC_KINDS = {"dirac-sa": "pe", "dirac-gpe": "gpe", "dirac-skew": "pe2"}


def load_seed(system: str, data: dict[str, Any]) -> Any:
    """Validated seed object for a system tag."""
    if system in DIRAC_KINDS:
        return dirac.DiracSeed.from_payload(DIRAC_KINDS[system], data)
    if system == "nwave":
        return nwave.NWaveSeed.from_payload(data)
    if system == "nls":
        return nls.NlsSeed.from_payload(data)
    if system == "radial":
        return radial.RadialSeed.from_payload(data)
    if system == "chiral":
        return chiral.ChiralSeed.from_payload(data)
    return elliptic.EllipticSeed.from_payload(system, data)


def construct(system: str, seed: Any, grid: GridSpec, tol: Tolerances) -> SolutionGrid:
    if system in DIRAC_KINDS:
        return dirac.pe_potential(seed, grid, tol)
    if system == "nwave":
        return nwave.nwave_solution(seed, grid, "gauge", tol)
    if system == "nls":
        return nls.nls_solution(seed, grid, tol)
    if system == "radial":
        return radial.radial_construct(seed, grid, tol)
    if system == "chiral":
        return chiral.chiral_transform(seed, grid, tol)
    return elliptic.elliptic_transform(seed, grid, tol=tol)


PDE_KINDS = {
    "nwave": PdeKind.NWAVE,
    "nls": PdeKind.FNLS,
    "chiral": PdeKind.CHIRAL,
    "sine-gordon": PdeKind.SINE_GORDON,
    "sinh-gordon": PdeKind.SINH_GORDON,
}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _linear_report(system: str, seed: Any, grid: GridSpec, tol: Tolerances) -> ResidualReport:
    """u_x = G u for the fundamental solution of the transformed linear system."""
    lam = CHECK_LAMBDA
    if system == "radial":
        solution = radial.RadialSolution(seed, tol)
        return ode_residual(lambda x: solution.u(x, lam), lambda x: solution.system_matrix(x, lam), grid)
    return ode_residual(
        lambda x: dirac.fundamental_solution(seed, x, lam, tol),
        lambda x: dirac.system_matrix(seed, x, lam, tol),
        grid,
    )


def verify(config: RunConfig, seed: Any, tol: Tolerances) -> tuple[dict[str, Any], list[str]]:
    """Residual reports keyed by equation, and the names of the failed ones."""
    system, grid = config.system, config.grid
    reports: dict[str, ResidualReport] = {}
    if system in DIRAC_KINDS or system == "radial":
        if config.input is not None:
            raise SeedValidationError("Field files are checked for nonlinear equations only")
        reports["linear_system"] = _linear_report(system, seed, grid, tol)
    else:
        extra: dict[str, Any] = {}
        if system == "nwave":
            extra = {"D": seed.D.tolist(), "D_hat": seed.D_hat.tolist()}
        kinds = [PDE_KINDS[system]]
        if system == "sinh-gordon":
            kinds.append(PdeKind.SINE_GORDON)
        if config.input is not None:
            field = read_solution(config.input, system, grid)
            for kind in kinds:
                reports[kind.value] = field_report(kind, field, **extra)
        else:
            field = construct(system, seed, grid, tol)
            refined = construct(system, seed, grid.refined(), tol)
            for kind in kinds:
                reports[kind.value] = pde_residual(kind, field, refined, **extra)

    primary = next(iter(reports))
    failed = [name for name, rep in reports.items() if name == primary and not rep.passed(tol)]
    out: dict[str, Any] = {name: {**rep.to_dict(), "passed": rep.passed(tol)} for name, rep in reports.items()}
    out["holds"] = [name for name, rep in reports.items() if rep.passed(tol)]
    return out, failed


def _max_deviation(a: Callable[[complex], Any], b: Callable[[complex], Any], points: np.ndarray) -> float:
    return max(fnorm(a(lam) - b(lam)) for lam in points)


def invert(config: RunConfig, tol: Tolerances) -> tuple[Any, float]:
    """Recovered seed and the deviation of its direct map from the input function."""
    data = config.seed
    phi = Realization.from_dict(data.get("realization", data))
    system = config.system
    if system == "dirac-sa":
        seed = dirac.weyl_inverse(phi, tol)
        again, points = dirac.weyl_direct(seed).realization, dirac.halfplane_points("upper")
    elif system == "dirac-skew":
        seed = dirac.skew_weyl_inverse(phi, tol)
        again, points = dirac.skew_weyl_direct(seed).realization, dirac.halfplane_points("lower")
    else:
        if "D" not in data:
            raise SeedValidationError("N-wave inversion needs D next to the realization")
        seed = nwave.nwave_inverse(phi, data["D"], data.get("D_hat"), tol)
        again, points = nwave.nwave_weyl(seed, 0.0, tol), dirac.halfplane_points("lower")
    deviation = _max_deviation(lambda lam: evaluate(phi, lam, tol), lambda lam: evaluate(again, lam, tol), points)
    return seed, deviation


def execute(config: RunConfig, tol: Tolerances, seed_check_only: bool = False) -> None:
    """
    Run one command and write its artifacts under config.output.

    Raises:
        GbdtError: any library failure; VerificationError after the report
            has been written
    """
    out = Path(config.output)
    system, command = config.system, config.command

    if command == "invert":
        if seed_check_only:
            Realization.from_dict(config.seed.get("realization", config.seed))
            logger.info("Realization payload is valid")
            return
        seed, deviation = invert(config, tol)
        write_json(out / "seed.json", seed.to_dict())
        write_json(out / "roundtrip.json", {"max_deviation": deviation, "limit": ROUND_TRIP_LIMIT})
        if deviation > ROUND_TRIP_LIMIT:
            raise VerificationError(f"Round trip deviates by {deviation:.3e}", max_residual=deviation)
        return

    seed = load_seed(system, config.seed)
    if seed_check_only:
        logger.info("Seed for %s is valid", system)
        return

    if command == "construct":
        solution = construct(system, seed, config.grid, tol)
        write_solution(solution, out / f"{system}.csv")
    elif command == "weyl":
        if system == "dirac-sa":
            wf = dirac.weyl_direct(seed)
            payload = {"realization": wf.realization.to_dict(), "herglotz_defect": wf.herglotz_defect()}
        elif system == "dirac-skew":
            wf = dirac.skew_weyl_direct(seed, config.grid, tol)
            payload = {"realization": wf.realization.to_dict(), "M1": wf.m1}
        else:
            phi = nwave.nwave_weyl(seed, 0.0, tol)
            payload = {"realization": phi.to_dict(), "properties": nwave.weyl_property_residuals(phi, tol=tol)}
        write_json(out / "weyl.json", payload)
    elif command == "scatter":
        data = dirac.gpe_scattering(seed, tol)
        for name in ("T_L", "R_L", "T_R", "R_R"):
            write_json(out / f"{name}.json", getattr(data, name).to_dict())
    elif command == "evolve":
        phis = nwave.weyl_evolution(seed, config.times, tol)
        write_json(out / "evolution.json", [{"t": t, "realization": p.to_dict()} for t, p in zip(config.times, phis)])
    else:
        report, failed = verify(config, seed, tol)
        write_json(out / "report.json", report)
        if failed:
            worst = report[failed[0]]
            raise VerificationError(
                f"{failed[0]} residual {worst['max_residual']:.3e} at {tuple(worst['location'])}",
                max_residual=worst["max_residual"],
                location=tuple(worst["location"]),
            )
    logger.info("%s %s finished, output in %s", system, command, out)


def run(config: RunConfig, tol_override: float | None = None, seed_check_only: bool = False) -> int:
    """Execute a configuration and return the process exit code."""
    try:
        tol = tolerances.override(**config.tolerances)
        if tol_override is not None:
            tol = tol.override(residual_constant=tol_override)
        execute(config, tol, seed_check_only)
    except VerificationError as e:
        logger.error(f"Verification failed: {e} (max residual {e.max_residual:.3e} at {e.location})")
        return EXIT_VERIFICATION
    except (NumericalError, np.linalg.LinAlgError) as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except (SeedValidationError, ValidationError, ValueError) as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_VALIDATION
    except GbdtError as e:
        logger.error(f"Run failed: {e}")
        return EXIT_VALIDATION
    return EXIT_OK
