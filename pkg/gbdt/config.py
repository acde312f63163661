from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

DEFAULT_TOLERANCES_PATH = Path(__file__).resolve().parent.parent / "config.yaml"


class Settings(BaseSettings):
    """Process settings loaded from environment variables (prefix GBDT_)."""

    # Parallelism
    threads: int = Field(default=1, ge=1)  # GBDT_THREADS

    # Tolerance table
    tolerances_path: str = Field(default=str(DEFAULT_TOLERANCES_PATH))

    # Logging
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(default="INFO")
    log_file: str = Field(default="")

    model_config = SettingsConfigDict(
        env_prefix="GBDT_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


class Tolerances(BaseModel):
    """Numerical thresholds shared by every module."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    hermitian_rtol: float = 1e-10
    posdef_rtol: float = 1e-12
    rank_rtol: float = 1e-10
    rank_gap: float = 1e3
    triangular_atol: float = 1e-12

    cond_cap: float = 1e13
    spectral_gap: float = 1e-10
    closed_form_gap: float = 1e-6
    pole_distance: float = 1e-12
    ode_rtol: float = 1e-12
    ode_atol: float = 1e-14
    quad_rtol: float = 1e-10
    quad_atol: float = 1e-13

    node_identity_rtol: float = 1e-9
    seed_identity_rtol: float = 1e-10
    evolved_identity_rtol: float = 1e-7

    riccati_residual: float = 1e-9
    riccati_max_candidates: int = 4096
    riccati_newton_steps: int = 8

    omega_rtol: float = 1e-8
    omega_max_x: float = 2.0**15
    singular_window: float = 1e-6
    bisection_tol: float = 1e-10

    residual_constant: float = 1e2
    order_min: float = 1.8
    order_max: float = 2.2

    def override(self, **changes: Any) -> "Tolerances":
        """Return a validated copy with some thresholds replaced."""
        return Tolerances(**{**self.model_dump(), **changes})


def load_tolerances(config_path: str | Path = DEFAULT_TOLERANCES_PATH) -> Tolerances:
    """Load the tolerance table from a YAML file."""
    path = Path(config_path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")

    with open(path, "r") as f:
        config = yaml.safe_load(f) or {}

    return Tolerances(**config.get("tolerances", {}))


# Global instances
settings = Settings()
tolerances = load_tolerances(settings.tolerances_path)


def resolve(tol: Tolerances | None) -> Tolerances:
    """Explicit override or the global table."""
    return tol if tol is not None else tolerances
