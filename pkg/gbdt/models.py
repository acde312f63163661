from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SystemTag = Literal[
    "dirac-sa",
    "dirac-gpe",
    "dirac-skew",
    "nwave",
    "nls",
    "radial",
    "chiral",
    "sine-gordon",
    "sinh-gordon",
]
CommandTag = Literal["construct", "weyl", "scatter", "invert", "verify", "evolve"]

# Command/system support matrix
SUPPORTED_SYSTEMS: dict[str, frozenset[str]] = {
    "construct": frozenset(SystemTag.__args__),
    "verify": frozenset(SystemTag.__args__),
    "weyl": frozenset({"dirac-sa", "dirac-skew", "nwave"}),
    "invert": frozenset({"dirac-sa", "dirac-skew", "nwave"}),
    "scatter": frozenset({"dirac-gpe"}),
    "evolve": frozenset({"nwave"}),
}


# ---------------------------------------------------------------------------
# Matrix codec: complex entries as [re, im], row-major nested lists
# ---------------------------------------------------------------------------


def encode_complex(z: complex) -> list[float]:
    """Encode one complex scalar as [re, im]."""
    z = complex(z)
    return [float(z.real) + 0.0, float(z.imag) + 0.0]


def decode_complex(value: Any) -> complex:
    """Decode [re, im] (or a bare real) into a complex scalar."""
    if isinstance(value, (int, float)):
        return complex(float(value), 0.0)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ValueError(f"Expected [re, im] pair, got {value!r}")


def encode_matrix(matrix: NDArray[np.complex128]) -> list[list[list[float]]]:
    """Encode a 2-D array as nested rows of [re, im] pairs."""
    m = np.atleast_2d(np.asarray(matrix, dtype=np.complex128))
    return [[encode_complex(z) for z in row] for row in m]


def decode_matrix(value: Any, shape: tuple[int, int] | None = None) -> NDArray[np.complex128]:
    """
    Decode nested rows of [re, im] pairs into a complex128 array.

    An empty list decodes to the given shape (default 0x0).
    """
    if value is None or (isinstance(value, list) and len(value) == 0):
        return np.zeros(shape or (0, 0), dtype=np.complex128)
    rows = [[decode_complex(z) for z in row] for row in value]
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise ValueError("Ragged matrix rows")
    m = np.array(rows, dtype=np.complex128)
    if shape is not None and m.shape != shape:
        raise ValueError(f"Expected matrix of shape {shape}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("Matrix entries must be finite")
    return m


def _check_matrix(value: Any) -> Any:
    decode_matrix(value)
    return value


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


class GridSpec(BaseModel):
    """Uniform 1-D grid in x, optionally with a second uniform axis in t."""

    model_config = ConfigDict(frozen=True)

    x0: float = Field(..., description="Left end of the x interval")
    x1: float = Field(..., description="Right end of the x interval")
    nx: int = Field(..., ge=2, description="Number of x samples, endpoints included")
    t0: float | None = Field(default=None, description="Left end of the t interval")
    t1: float | None = Field(default=None, description="Right end of the t interval")
    nt: int | None = Field(default=None, ge=2, description="Number of t samples")

    @model_validator(mode="after")
    def check_intervals(self) -> "GridSpec":
        """Intervals must be ordered; the t axis is all-or-nothing."""
        if not self.x0 < self.x1:
            raise ValueError(f"x0 < x1 required, got {self.x0} >= {self.x1}")
        t_fields = (self.t0, self.t1, self.nt)
        if any(v is not None for v in t_fields) and any(v is None for v in t_fields):
            raise ValueError("t0, t1 and nt must be given together")
        if self.t0 is not None and not self.t0 < self.t1:
            raise ValueError(f"t0 < t1 required, got {self.t0} >= {self.t1}")
        return self

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse "x0,x1,nx[,t0,t1,nt]"."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) not in (3, 6):
            raise ValueError(f"Grid must be 'x0,x1,nx[,t0,t1,nt]', got {text!r}")
        kwargs: dict[str, Any] = {"x0": float(parts[0]), "x1": float(parts[1]), "nx": int(parts[2])}
        if len(parts) == 6:
            kwargs.update(t0=float(parts[3]), t1=float(parts[4]), nt=int(parts[5]))
        return cls(**kwargs)

    @property
    def is_2d(self) -> bool:
        return self.nt is not None

    @property
    def xs(self) -> NDArray[np.float64]:
        return np.linspace(self.x0, self.x1, self.nx)

    @property
    def ts(self) -> NDArray[np.float64]:
        if not self.is_2d:
            return np.zeros(1)
        return np.linspace(self.t0, self.t1, self.nt)

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def ht(self) -> float:
        if not self.is_2d:
            return 0.0
        return (self.t1 - self.t0) / (self.nt - 1)

    def refined(self) -> "GridSpec":
        """Same intervals with every spacing halved."""
        update: dict[str, Any] = {"nx": 2 * self.nx - 1}
        if self.is_2d:
            update["nt"] = 2 * self.nt - 1
        return self.model_copy(update=update)

    @property
    def coarsenable(self) -> bool:
        """Every axis has an odd sample count, so every other sample lies on a grid of spacing 2h."""
        return self.nx % 2 == 1 and (not self.is_2d or self.nt % 2 == 1)

    def coarsened(self) -> "GridSpec":
        """Inverse of refined: the same intervals with every spacing doubled."""
        if not self.coarsenable:
            raise ValueError(f"Grid with nx={self.nx}, nt={self.nt} has no coarser subgrid")
        update: dict[str, Any] = {"nx": (self.nx + 1) // 2}
        if self.is_2d:
            update["nt"] = (self.nt + 1) // 2
        return self.model_copy(update=update)


# ---------------------------------------------------------------------------
# Seed payloads
# ---------------------------------------------------------------------------


class RealizationPayload(BaseModel):
    """State-space data (A, B, C, D) of a proper rational matrix function."""

    A: list = Field(default_factory=list, description="n x n state matrix")
    B: list = Field(default_factory=list, description="n x m1 input matrix")
    C: list = Field(default_factory=list, description="m2 x n output matrix")
    D: list = Field(..., description="m2 x m1 feedthrough matrix")

    @field_validator("A", "B", "C", "D")
    @classmethod
    def check_matrices(cls, v: list) -> list:
        return _check_matrix(v)


class DiracSeedPayload(BaseModel):
    """Parameter matrices of a Dirac-type seed."""

    A: list = Field(..., description="n x n parameter matrix")
    S0: list | None = Field(default=None, description="S(0); identity when omitted (PE, PE2)")
    Phi1: list = Field(..., description="Phi_1(0), n x p1")
    Phi2: list = Field(..., description="Phi_2(0), n x p2")
    p1: int = Field(default=1, ge=1, description="Width of Phi_1 when n = 0")
    p2: int | None = Field(default=None, ge=1, description="Width of Phi_2 when n = 0; p1 by default")

    @field_validator("A", "Phi1", "Phi2")
    @classmethod
    def check_matrices(cls, v: list) -> list:
        return _check_matrix(v)


class NWaveSeedPayload(BaseModel):
    """Parameter matrices of an N-wave seed."""

    A: list = Field(..., description="n x n parameter matrix")
    S0: list | None = Field(default=None, description="S(0); solved from the identity when omitted")
    Pi0: list = Field(..., description="Pi(0,0), n x m")
    D: list[float] = Field(..., min_length=2, description="Diagonal of D")
    D_hat: list[float] = Field(..., min_length=2, description="Diagonal of D-hat")

    @model_validator(mode="after")
    def check_sizes(self) -> "NWaveSeedPayload":
        if len(self.D) != len(self.D_hat):
            raise ValueError("D and D_hat must have the same length")
        return self


class NlsSeedPayload(BaseModel):
    """Diagonal NLS seed: eigenvalues a_k and vectors f_k."""

    a: list = Field(..., min_length=1, description="Diagonal entries a_k as [re, im]")
    f: list = Field(..., min_length=1, description="Vectors f_k in C^2, one per a_k")
    background: Literal["zero", "plane_wave"] = Field(default="zero")

    @model_validator(mode="after")
    def check_sizes(self) -> "NlsSeedPayload":
        if len(self.a) != len(self.f):
            raise ValueError("a and f must have the same length")
        return self


class RadialSeedPayload(BaseModel):
    """Radial Dirac seed (kappa, A1, S1, Psi1, A2, Psi2)."""

    kappa: int = Field(..., description="Signed singular coefficient of the seed")
    A1: list = Field(default_factory=list)
    S1: list = Field(default_factory=list)
    Psi1: list = Field(default_factory=list)
    A2: list = Field(default_factory=list)
    Psi2: list = Field(default_factory=list)


class ChiralSeedPayload(BaseModel):
    """Chiral-field node data and the seed field choice."""

    A1: list
    A2: list
    S0: list
    Pi1: list
    Pi2: list
    seed_field: Literal["identity", "abelian"] = Field(default="identity")


class EllipticSeedPayload(BaseModel):
    """Sine/sinh-Gordon seed on the trivial background v = 0."""

    A: list
    Pi0: list
    S0: list | None = Field(default=None, description="Solved from the identity when omitted")
    U: list | None = Field(default=None, description="Conjugation matrix; checked when given")


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


class RunConfig(BaseModel):
    """One CLI run: system, command, seed, grid and output."""

    system: SystemTag
    command: CommandTag
    seed: dict[str, Any] = Field(default_factory=dict)
    grid: GridSpec | None = None
    output: str = Field(default="out")
    input: str | None = Field(default=None, description="Field CSV checked by verify instead of a fresh construction")
    times: list[float] = Field(default_factory=lambda: [0.0], description="Time list for evolve")
    tolerances: dict[str, float] = Field(default_factory=dict, description="Tolerance overrides")

    @model_validator(mode="after")
    def check_support(self) -> "RunConfig":
        """Reject system/command combinations outside the support matrix."""
        if self.system not in SUPPORTED_SYSTEMS[self.command]:
            raise ValueError(f"Command '{self.command}' is not supported for system '{self.system}'")
        if self.command in ("construct", "verify") and self.grid is None:
            raise ValueError(f"Command '{self.command}' requires a grid")
        return self
