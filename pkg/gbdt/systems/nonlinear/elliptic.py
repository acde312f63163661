"""
Elliptic sine-Gordon and sinh-Gordon equations

    v_tt + v_xx = sin v     and     v_tt + v_xx = sinh v     (v real).

The node is (A, -(A*)^{-1}, S, Pi, Pi2) with Pi2 = A^{-1} Pi J for
sine-Gordon and Pi2 = A^{-1} Pi for sinh-Gordon. With Z = w_A(x, t, 0),
which is diagonal under the conjugation symmetry of the seed,

    sine-Gordon:  v^ = v + 2 arg Z_11   (Z_11 = 1 + b, |1 + b| = 1)
    sinh-Gordon:  v^ = v + 2 ln |Z_11|  (Z_11 real)
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from gbdt._compat import StrEnum
from typing import Any

import numpy as np

from ...config import Tolerances, resolve
from ...core.gbdt_core import GbdtPlane, RationalCoeffs, evolve_plane
from ...core.matcore import CMat, adj, condition, fnorm, hermitian_part, inv, solve_sylvester
from ...core.snode import transfer_eval
from ...core.solution import SolutionGrid
from ...errors import SeedValidationError, SingularMatrixError
from ...models import EllipticSeedPayload, GridSpec, decode_matrix, encode_matrix
from ..dirac import j_matrix

logger = logging.getLogger(__name__)

J2 = j_matrix(1, 1)
SWAP = np.array([[0, 1], [1, 0]], dtype=np.complex128)

ScalarField = Callable[[float, float], float]


class EllipticVariant(StrEnum):
    SINE = "sine-gordon"
    SINH = "sinh-gordon"


@dataclass(frozen=True)
class SeedSolution:
    """Real solution v of the seed equation with its first derivatives."""
    v: ScalarField
    v_x: ScalarField
    v_t: ScalarField

    @classmethod
    def zero(cls) -> "SeedSolution":
        return cls(lambda x, t: 0.0, lambda x, t: 0.0, lambda x, t: 0.0)


def zeta(variant: EllipticVariant, v: float) -> CMat:
    if variant is EllipticVariant.SINE:
        return np.array([[0, np.exp(-0.5j * v)], [np.exp(0.5j * v), 0]], dtype=np.complex128)
    return np.array([[0, np.exp(-v / 2)], [np.exp(v / 2), 0]], dtype=np.complex128)


@dataclass(frozen=True)
class EllipticSeed:
    """Parameter matrices A, Pi(0,0), S(0,0) and the optional conjugation matrix U."""
    variant: EllipticVariant
    A: CMat
    Pi0: CMat
    S0: CMat
    U: CMat | None = None

    def __post_init__(self) -> None:
        tol = resolve(None)
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.S0.shape != (n, n) or self.Pi0.shape != (n, 2):
            raise SeedValidationError(f"A and S0 must be {n}x{n} and Pi0 {n}x2")
        if condition(self.A) > tol.cond_cap:
            raise SeedValidationError("A must be invertible")
        if fnorm(self.S0 - adj(self.S0)) > tol.hermitian_rtol * max(1.0, fnorm(self.S0)):
            raise SeedValidationError("S(0,0) must be Hermitian")
        residual = fnorm(self.A @ self.S0 @ adj(self.A) + self.S0 - self._identity_rhs())
        scale = max(1.0, fnorm(self.A) ** 2 * fnorm(self.S0) + fnorm(self.S0) + fnorm(self.Pi0) ** 2)
        if residual > tol.seed_identity_rtol * scale:
            raise SeedValidationError(f"Seed identity A S A* + S = Pi J Pi* violated (residual {residual:.3e})")
        if self.U is not None:
            defect = symmetry_defect(self)
            if defect > 1e-10 * scale:
                raise SeedValidationError(f"Conjugation symmetry of the seed violated (defect {defect:.3e})")

    def _identity_rhs(self) -> CMat:
        if self.variant is EllipticVariant.SINE:
            return self.Pi0 @ SWAP @ adj(self.Pi0)
        return self.Pi0 @ adj(self.Pi0)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def A2(self) -> CMat:
        return -inv(adj(self.A))

    @property
    def Pi2_0(self) -> CMat:
        pi2 = inv(self.A) @ self.Pi0
        return pi2 @ SWAP if self.variant is EllipticVariant.SINE else pi2

    @classmethod
    def build(cls, variant: EllipticVariant | str, A: Any, Pi0: Any, S0: Any = None, U: Any = None) -> "EllipticSeed":
        variant = EllipticVariant(variant)
        a = np.atleast_2d(np.asarray(A, dtype=np.complex128))
        pi0 = np.asarray(Pi0, dtype=np.complex128).reshape(a.shape[0], 2)
        u = None if U is None else np.atleast_2d(np.asarray(U, dtype=np.complex128))
        s0 = solve_identity(variant, a, pi0) if S0 is None else np.atleast_2d(np.asarray(S0, dtype=np.complex128))
        return cls(variant, a, pi0, s0, u)

    @classmethod
    def from_payload(cls, variant: EllipticVariant | str, data: dict[str, Any]) -> "EllipticSeed":
        payload = EllipticSeedPayload(**data)
        s0 = None if payload.S0 is None else decode_matrix(payload.S0)
        u = None if payload.U is None else decode_matrix(payload.U)
        return cls.build(variant, decode_matrix(payload.A), decode_matrix(payload.Pi0), s0, u)

    def to_dict(self) -> dict[str, Any]:
        out = {"A": encode_matrix(self.A), "Pi0": encode_matrix(self.Pi0), "S0": encode_matrix(self.S0)}
        if self.U is not None:
            out["U"] = encode_matrix(self.U)
        return out


def solve_identity(variant: EllipticVariant, a: CMat, pi0: CMat, tol: Tolerances | None = None) -> CMat:
    """S from A S + S (A*)^{-1} = R (A*)^{-1}, R = Pi J Pi* or Pi Pi*."""
    rhs = pi0 @ SWAP @ adj(pi0) if variant is EllipticVariant.SINE else pi0 @ adj(pi0)
    a_star_inv = inv(adj(a), tol)
    return hermitian_part(solve_sylvester(a, -a_star_inv, rhs @ a_star_inv, tol))


def symmetry_defect(seed: EllipticSeed) -> float:
    """Largest defect of conj A = U A^{-1} U^{-1}, the Pi relation and conj S = U A S A* U*."""
    u = seed.U
    u_inv = inv(u)
    pi_target = u @ seed.Pi0 @ SWAP if seed.variant is EllipticVariant.SINH else u @ seed.Pi0
    return max(
        fnorm(np.conj(seed.A) - u @ inv(seed.A) @ u_inv),
        fnorm(np.conj(seed.Pi0) - pi_target),
        fnorm(np.conj(seed.S0) - u @ seed.A @ seed.S0 @ adj(seed.A) @ adj(u)),
    )


def elliptic_coeffs(variant: EllipticVariant, field: SeedSolution) -> tuple[RationalCoeffs, RationalCoeffs]:
    """Coefficients of G (along x) and F (along t): degree 1 in lambda plus a simple pole at 0."""
    zt = lambda x, t: zeta(variant, field.v(x, t))  # noqa: E731
    if variant is EllipticVariant.SINE:
        x_coeffs = RationalCoeffs(
            poly=(lambda x, t: -field.v_t(x, t) / 4 * J2, lambda x, t: -0.25j * zt(x, t)),
            poles=((0.0, (lambda x, t: 0.25j * SWAP @ zt(x, t) @ SWAP,)),),
        )
        t_coeffs = RationalCoeffs(
            poly=(lambda x, t: field.v_x(x, t) / 4 * J2, lambda x, t: zt(x, t) / 4),
            poles=((0.0, (lambda x, t: SWAP @ zt(x, t) @ SWAP / 4,)),),
        )
    else:
        x_coeffs = RationalCoeffs(
            poly=(lambda x, t: -0.25j * field.v_t(x, t) * J2, lambda x, t: zt(x, t) / 4),
            poles=((0.0, (lambda x, t: adj(zt(x, t)) / 4,)),),
        )
        t_coeffs = RationalCoeffs(
            poly=(lambda x, t: 0.25j * field.v_x(x, t) * J2, lambda x, t: -0.25j * zt(x, t)),
            poles=((0.0, (lambda x, t: 0.25j * adj(zt(x, t)),)),),
        )
    return x_coeffs, t_coeffs


def elliptic_plane(seed: EllipticSeed, field: SeedSolution, grid: GridSpec, tol: Tolerances | None = None) -> GbdtPlane:
    x_coeffs, t_coeffs = elliptic_coeffs(seed.variant, field)
    return evolve_plane(
        x_coeffs, t_coeffs, seed.A, seed.A2, seed.S0, seed.Pi0, seed.Pi2_0, grid,
        origin=(0.0, 0.0), tol=tol,
    )


def unwrap_from_origin(theta: np.ndarray, xs: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """
    Continuous phase along the row through the sample nearest (0, 0), then
    along every column from that row. The origin sample keeps its value.
    """
    it0, ix0 = int(np.argmin(np.abs(ts))), int(np.argmin(np.abs(xs)))
    row = np.unwrap(theta[it0])
    row += theta[it0, ix0] - row[ix0]
    cols = np.unwrap(theta, axis=0)
    return cols + (row - cols[it0])[None, :]


def elliptic_transform(
    seed: EllipticSeed,
    grid: GridSpec,
    field: SeedSolution | None = None,
    tol: Tolerances | None = None,
) -> SolutionGrid:
    """
    v^ over a 2-D grid from the seed solution v (zero by default).

    Samples where det S = 0 or Z_11 = 0 are emitted as NaN.
    """
    tol = resolve(tol)
    if not grid.is_2d:
        raise SeedValidationError("Elliptic solutions need a 2-D grid")
    field = field or SeedSolution.zero()
    plane = elliptic_plane(seed, field, grid, tol)
    xs, ts = grid.xs, grid.ts
    z11 = np.full((len(ts), len(xs)), np.nan, dtype=np.complex128)
    offdiag = 0.0
    for it in range(len(ts)):
        for ix in range(len(xs)):
            try:
                z = transfer_eval(plane.node(it, ix), 0.0, tol)
            except SingularMatrixError:
                continue
            if abs(z[0, 0]) < tol.singular_window:
                continue
            z11[it, ix] = z[0, 0]
            offdiag = max(offdiag, abs(z[0, 1]), abs(z[1, 0]))
    base = np.array([[field.v(x, t) for x in xs] for t in ts])
    ok = np.isfinite(z11)
    if seed.variant is EllipticVariant.SINE:
        phase = unwrap_from_origin(np.where(ok, np.angle(np.where(ok, z11, 1.0)), 0.0), xs, ts)
        correction = 2 * phase
        defect = float(np.max(np.abs(np.abs(z11[ok]) - 1.0))) if ok.any() else 0.0
        metadata = {"modulus_defect": defect}
    else:
        correction = 2 * np.log(np.abs(np.where(ok, z11, 1.0)))
        defect = float(np.max(np.abs(z11[ok].imag))) if ok.any() else 0.0
        metadata = {"imag_defect": defect}
    v_hat = np.where(ok, base + correction, np.nan)
    if not ok.all():
        logger.warning("%d %s samples flagged where S or Z_11 vanish", int((~ok).sum()), seed.variant.value)
    metadata.update(
        variant=seed.variant.value,
        offdiag_max=offdiag,
        identity_residual=float(np.max(plane.identity_residuals())),
    )
    return SolutionGrid(
        system=seed.variant.value,
        grid=grid,
        values=v_hat.astype(np.complex128)[..., None, None],
        components={"abs_z11": np.abs(z11)},
        metadata=metadata,
    )
