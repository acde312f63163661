"""
Residual Oracles

Finite-difference checks that constructed solutions satisfy their linear
systems, zero-curvature conditions and nonlinear equations. Derivatives are
central differences on interior points only; the convergence order comes from
the pair (h, h/2) as log2(r_h / r_{h/2}), or from (2h, h) for a field sampled
once. A report passes when it is exact, or when its order is near 2 and
r_h / h**2 stays under the residual constant.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from gbdt._compat import StrEnum
from typing import Any

import numpy as np
from numpy.typing import NDArray

from ..config import Tolerances, resolve
from ..core.matcore import CMat, grid_map, inv
from ..core.solution import SolutionGrid
from ..errors import SeedValidationError, SingularMatrixError, VerificationError
from ..models import GridSpec

logger = logging.getLogger(__name__)

# Residuals below this are rounding noise; no order is fitted from them
EXACT_FLOOR = 1e-12

MIN_POINTS = 5

Sampler1D = Callable[[float], CMat]
Sampler2D = Callable[[float, float], CMat]


@dataclass(frozen=True)
class ResidualReport:
    """
    Largest residual on a grid, where it occurs, and the fitted order.

    The order comes from the same field on the refined grid (refined_residual)
    or on the every-other-sample subgrid (coarse_residual).
    """
    max_residual: float
    h: float
    location: tuple[int, ...] = ()
    order: float | None = None
    refined_residual: float | None = None
    coarse_residual: float | None = None

    def __post_init__(self) -> None:
        if not self.max_residual >= 0:
            raise SeedValidationError(f"Residual must be nonnegative, got {self.max_residual}")
        if not self.h > 0:
            raise SeedValidationError(f"Grid spacing must be positive, got {self.h}")

    @property
    def exact(self) -> bool:
        """Both refinements are at rounding level."""
        fine = self.max_residual if self.refined_residual is None else self.refined_residual
        return max(self.max_residual, fine) <= EXACT_FLOOR

    @property
    def scaled_residual(self) -> float:
        """max_residual / h**2, the constant of a second-order error."""
        return self.max_residual / self.h**2

    def passed(self, tol: Tolerances | None = None, limit: float | None = None) -> bool:
        """
        Exact, or second order with max_residual <= limit * h**2.

        limit defaults to tol.residual_constant. Without an order estimate
        only the scaled bound applies.
        """
        tol = resolve(tol)
        limit = tol.residual_constant if limit is None else limit
        if self.exact:
            return True
        if self.scaled_residual > limit:
            return False
        if self.order is None:
            return True
        return tol.order_min <= self.order <= tol.order_max

    def check(self, name: str, tol: Tolerances | None = None, limit: float | None = None) -> None:
        """
        Raises:
            VerificationError: scaled residual above the limit or order outside the accepted range
        """
        if not self.passed(tol, limit):
            order = "n/a" if self.order is None else f"{self.order:.3f}"
            raise VerificationError(
                f"{name}: residual {self.max_residual:.3e} (h^-2 scaled {self.scaled_residual:.3e}) at {self.location}, order {order}",
                max_residual=self.max_residual,
                location=self.location,
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_residual": self.max_residual,
            "h": self.h,
            "scaled_residual": self.scaled_residual,
            "location": list(self.location),
            "order": self.order,
            "refined_residual": self.refined_residual,
            "coarse_residual": self.coarse_residual,
            "exact": self.exact,
        }


def estimate_order(coarse: float, fine: float) -> float | None:
    """log2(r_h / r_{h/2}); None when either residual is at rounding level."""
    if coarse <= EXACT_FLOOR or fine <= EXACT_FLOOR:
        return None
    return math.log2(coarse / fine)


def _with_refinement(coarse: ResidualReport, fine: ResidualReport) -> ResidualReport:
    return ResidualReport(
        max_residual=coarse.max_residual,
        h=coarse.h,
        location=coarse.location,
        order=estimate_order(coarse.max_residual, fine.max_residual),
        refined_residual=fine.max_residual,
    )


def _norms(r: NDArray[np.complex128]) -> NDArray[np.float64]:
    """Frobenius norm over the trailing matrix axes; NaN stencils are dropped later."""
    return np.sqrt(np.sum(np.abs(r) ** 2, axis=(-2, -1)))


def _report(norms: NDArray[np.float64], h: float, offset: int = 1) -> ResidualReport:
    finite = np.isfinite(norms)
    if not finite.any():
        raise VerificationError("No finite residual samples on the grid")
    masked = np.where(finite, norms, -np.inf)
    idx = np.unravel_index(int(np.argmax(masked)), norms.shape)
    return ResidualReport(
        max_residual=float(norms[idx]),
        h=h,
        location=tuple(int(i) + offset for i in idx),
    )


def _require_points(n: int, label: str) -> None:
    if n < MIN_POINTS:
        raise SeedValidationError(f"Grid too coarse: {n} {label} samples, at least {MIN_POINTS} needed")


def _commutator(a: NDArray[np.complex128], b: NDArray[np.complex128]) -> NDArray[np.complex128]:
    return a @ b - b @ a


def _dagger(a: NDArray[np.complex128]) -> NDArray[np.complex128]:
    return np.conj(np.swapaxes(a, -1, -2))


# ---------------------------------------------------------------------------
# Linear systems
# ---------------------------------------------------------------------------


def _ode_samples(u: NDArray[np.complex128], g: NDArray[np.complex128], h: float) -> ResidualReport:
    du = (u[2:] - u[:-2]) / (2 * h)
    return _report(_norms(du - g[1:-1] @ u[1:-1]), h)


def ode_residual(u: Sampler1D, G: Sampler1D, grid: GridSpec, refine: bool = True) -> ResidualReport:
    """
    max over interior points of ||D_h u - G u|| for u_x = G u.

    Raises:
        SeedValidationError: fewer than 5 grid points
    """
    _require_points(grid.nx, "x")

    def sample(g: GridSpec) -> ResidualReport:
        xs = [float(x) for x in g.xs]
        us = np.stack(grid_map(u, xs))
        gs = np.stack(grid_map(G, xs))
        return _ode_samples(us, gs, g.hx)

    coarse = sample(grid)
    if not refine:
        return coarse
    return _with_refinement(coarse, sample(grid.refined()))


def _plane(sampler: Sampler2D, g: GridSpec) -> NDArray[np.complex128]:
    points = [(float(x), float(t)) for t in g.ts for x in g.xs]
    values = grid_map(lambda p: sampler(*p), points)
    first = values[0]
    return np.stack(values).reshape(len(g.ts), len(g.xs), *first.shape)


def zero_curvature_samples(
    g: NDArray[np.complex128],
    f: NDArray[np.complex128],
    hx: float,
    ht: float,
) -> ResidualReport:
    """
    max ||D_t G - D_x F + [G, F]|| from arrays indexed [t, x, :, :].

    Raises:
        SeedValidationError: the two arrays are not sampled on the same grid
    """
    if g.shape != f.shape or g.ndim != 4:
        raise SeedValidationError(f"G and F must share a 2-D grid, got shapes {g.shape} and {f.shape}")
    _require_points(g.shape[0], "t")
    _require_points(g.shape[1], "x")
    g_t = (g[2:, 1:-1] - g[:-2, 1:-1]) / (2 * ht)
    f_x = (f[1:-1, 2:] - f[1:-1, :-2]) / (2 * hx)
    inner_g, inner_f = g[1:-1, 1:-1], f[1:-1, 1:-1]
    return _report(_norms(g_t - f_x + _commutator(inner_g, inner_f)), max(hx, ht))


def zero_curvature_residual(G: Sampler2D, F: Sampler2D, grid: GridSpec, refine: bool = True) -> ResidualReport:
    """G_t - F_x + [G, F] = 0 for samplers (x, t) -> matrix."""
    if not grid.is_2d:
        raise SeedValidationError("Zero-curvature checks need a 2-D grid")

    def sample(g: GridSpec) -> ResidualReport:
        return zero_curvature_samples(_plane(G, g), _plane(F, g), g.hx, g.ht)

    coarse = sample(grid)
    if not refine:
        return coarse
    return _with_refinement(coarse, sample(grid.refined()))


# ---------------------------------------------------------------------------
# Nonlinear equations
# ---------------------------------------------------------------------------


class PdeKind(StrEnum):
    NWAVE = "nwave"
    FNLS = "fnls"
    CHIRAL = "chiral"
    SINE_GORDON = "sine-gordon"
    SINH_GORDON = "sinh-gordon"


def fnls_defect(v: CMat, v_t: CMat, v_xx: CMat) -> float:
    """||2 v_t + i (v_xx + 2 v v* v)|| at one point, from exact derivatives."""
    return float(np.linalg.norm(2 * v_t + 1j * (v_xx + 2 * v @ v.conj().T @ v)))


def _field_residual(kind: PdeKind, field: SolutionGrid, D: NDArray[np.float64] | None, D_hat: NDArray[np.float64] | None) -> ResidualReport:
    if not field.is_2d:
        raise SeedValidationError("PDE residuals need a 2-D field")
    v = field.values
    _require_points(v.shape[0], "t")
    _require_points(v.shape[1], "x")
    hx, ht = field.grid.hx, field.grid.ht
    inner = v[1:-1, 1:-1]
    v_x = (v[1:-1, 2:] - v[1:-1, :-2]) / (2 * hx)
    v_t = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2 * ht)

    if kind is PdeKind.FNLS:
        v_xx = (v[1:-1, 2:] - 2 * inner + v[1:-1, :-2]) / hx**2
        r = 2 * v_t + 1j * (v_xx + 2 * inner @ _dagger(inner) @ inner)
    elif kind is PdeKind.NWAVE:
        if D is None or D_hat is None:
            raise SeedValidationError("The N-wave residual needs D and D_hat")
        d = np.diag(np.asarray(D, dtype=np.float64)).astype(np.complex128)
        d_hat = np.diag(np.asarray(D_hat, dtype=np.float64)).astype(np.complex128)
        r = _commutator(d, v_t) - _commutator(d_hat, v_x) - _commutator(_commutator(d, inner), _commutator(d_hat, inner))
    elif kind is PdeKind.CHIRAL:
        v_xt = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4 * hx * ht)
        z_inv = np.full_like(inner, np.nan)
        for idx in np.ndindex(*inner.shape[:2]):
            if np.all(np.isfinite(inner[idx])):
                try:
                    z_inv[idx] = inv(inner[idx])
                except SingularMatrixError:
                    logger.debug("Chiral field singular at %s, sample dropped", idx)
        r = 2 * v_xt - v_x @ z_inv @ v_t - v_t @ z_inv @ v_x
    else:
        v_xx = (v[1:-1, 2:] - 2 * inner + v[1:-1, :-2]) / hx**2
        v_tt = (v[2:, 1:-1] - 2 * inner + v[:-2, 1:-1]) / ht**2
        source = np.sin(inner) if kind is PdeKind.SINE_GORDON else np.sinh(inner)
        r = v_tt + v_xx - source
    return _report(_norms(r), max(hx, ht))


def pde_residual(
    kind: PdeKind | str,
    field: SolutionGrid,
    refined: SolutionGrid | None = None,
    D: Sequence[float] | None = None,
    D_hat: Sequence[float] | None = None,
) -> ResidualReport:
    """
    Residual of one nonlinear equation on a sampled field.

        nwave        [D, xi_t] - [D_hat, xi_x] = [[D, xi], [D_hat, xi]]
        fnls         2 v_t + i (v_xx + 2 v v* v) = 0
        chiral       2 z_xt = z_x z^{-1} z_t + z_t z^{-1} z_x
        sine-gordon  v_tt + v_xx = sin v
        sinh-gordon  v_tt + v_xx = sinh v

    D and D_hat default to the field metadata. The order is estimated when
    the same field sampled on the refined grid is given.

    Raises:
        SeedValidationError: not enough interior points for second differences
    """
    kind = PdeKind(kind)
    D = field.metadata.get("D") if D is None else D
    D_hat = field.metadata.get("D_hat") if D_hat is None else D_hat
    coarse = _field_residual(kind, field, D, D_hat)
    if refined is None:
        return coarse
    return _with_refinement(coarse, _field_residual(kind, refined, D, D_hat))


def pde_report(
    kind: PdeKind | str,
    build: Callable[[GridSpec], SolutionGrid],
    grid: GridSpec,
) -> ResidualReport:
    """Build the field on the grid and its refinement, then run pde_residual."""
    field = build(grid)
    report = pde_residual(kind, field, build(grid.refined()))
    logger.debug("%s residual %.3e, order %s", kind, report.max_residual, report.order)
    return report


def field_report(
    kind: PdeKind | str,
    field: SolutionGrid,
    D: Sequence[float] | None = None,
    D_hat: Sequence[float] | None = None,
) -> ResidualReport:
    """
    pde_residual for a field sampled once, with the order fitted against its
    every-other-sample subgrid at spacing 2h.

    Grids with an even sample count, or too few samples for a subgrid, get
    no order estimate.
    """
    fine = pde_residual(kind, field, D=D, D_hat=D_hat)
    grid = field.grid
    if not grid.coarsenable or min(grid.nx, grid.nt or grid.nx) < 2 * MIN_POINTS - 1:
        logger.info("No %d-point subgrid inside %dx%s samples, order not estimated", MIN_POINTS, grid.nx, grid.nt)
        return fine
    coarse = pde_residual(kind, field.coarsened(), D=D, D_hat=D_hat)
    return ResidualReport(
        max_residual=fine.max_residual,
        h=fine.h,
        location=fine.location,
        order=estimate_order(coarse.max_residual, fine.max_residual),
        coarse_residual=coarse.max_residual,
    )
