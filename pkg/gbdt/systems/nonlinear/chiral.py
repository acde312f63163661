"""
Main chiral field equation

    2 z_xt = z_x z^{-1} z_t + z_t z^{-1} z_x

with auxiliary systems G = -(lambda - 1)^{-1} z_x z^{-1} and
F = (lambda + 1)^{-1} z_t z^{-1}. A node evolved by the general engine gives
the new solution z~(x, t) = w_A(x, t, 0) z(x, t).
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np

from ...config import Tolerances, resolve
from ...core.gbdt_core import GbdtPlane, RationalCoeffs, evolve_plane
from ...core.matcore import CMat, condition, eye, fnorm, inv, solve_linear
from ...core.snode import SNode, identity_scale, transfer_eval, verify_identity
from ...core.solution import SolutionGrid
from ...errors import SeedValidationError, SingularMatrixError
from ...models import ChiralSeedPayload, GridSpec, decode_matrix, encode_matrix

logger = logging.getLogger(__name__)

MatrixField = Callable[[float, float], CMat]


@dataclass(frozen=True)
class ChiralField:
    """A solution z of the chiral equation with its first derivatives."""
    name: str
    z: MatrixField
    z_x: MatrixField
    z_t: MatrixField

    def q11(self, x: float, t: float = 0.0) -> CMat:
        """z_x z^{-1}."""
        z = self.z(x, t)
        return solve_linear(z.T, self.z_x(x, t).T).T

    def Q11(self, x: float, t: float = 0.0) -> CMat:
        """-z_t z^{-1}."""
        z = self.z(x, t)
        return -solve_linear(z.T, self.z_t(x, t).T).T

    @classmethod
    def identity(cls, m: int) -> "ChiralField":
        i, o = eye(m), np.zeros((m, m), dtype=np.complex128)
        return cls("identity", lambda x, t: i, lambda x, t: o, lambda x, t: o)

    @classmethod
    def abelian(cls) -> "ChiralField":
        """z = diag(exp(sin x + t), exp(cos t - x))."""
        def z(x: float, t: float) -> CMat:
            return np.diag([np.exp(np.sin(x) + t), np.exp(np.cos(t) - x)]).astype(np.complex128)

        def z_x(x: float, t: float) -> CMat:
            return np.diag([np.cos(x), -1.0]) @ z(x, t)

        def z_t(x: float, t: float) -> CMat:
            return np.diag([1.0, -np.sin(t)]) @ z(x, t)

        return cls("abelian", z, z_x, z_t)


def field_by_name(name: Literal["identity", "abelian"], m: int) -> ChiralField:
    if name == "abelian":
        if m != 2:
            raise SeedValidationError("The abelian seed field is 2 x 2")
        return ChiralField.abelian()
    return ChiralField.identity(m)


@dataclass(frozen=True)
class ChiralSeed:
    """Node data at (0, 0) and the seed solution z."""
    A1: CMat
    A2: CMat
    S0: CMat
    Pi1: CMat
    Pi2: CMat
    field: ChiralField

    def __post_init__(self) -> None:
        node = SNode.new_unchecked(self.A1, self.A2, self.S0, self.Pi1, self.Pi2)
        if verify_identity(node) > resolve(None).seed_identity_rtol * identity_scale(node):
            raise SeedValidationError("Node identity A1 S - S A2 = Pi1 Pi2* violated at (0, 0)")
        for name, a in (("A1", self.A1), ("A2", self.A2)):
            if a.size and condition(a) > resolve(None).cond_cap:
                raise SeedValidationError(f"{name} must be invertible")

    @property
    def m(self) -> int:
        return self.Pi1.shape[1]

    @classmethod
    def from_payload(cls, data: dict[str, Any]) -> "ChiralSeed":
        payload = ChiralSeedPayload(**data)
        pi1 = decode_matrix(payload.Pi1)
        return cls(
            decode_matrix(payload.A1),
            decode_matrix(payload.A2),
            decode_matrix(payload.S0),
            pi1,
            decode_matrix(payload.Pi2),
            field_by_name(payload.seed_field, pi1.shape[1]),
        )

    def to_dict(self) -> dict[str, Any]:
        out = {k: encode_matrix(getattr(self, k)) for k in ("A1", "A2", "S0", "Pi1", "Pi2")}
        out["seed_field"] = self.field.name
        return out


def chiral_coeffs(field: ChiralField) -> tuple[RationalCoeffs, RationalCoeffs]:
    """Simple pole at 1 in x with residue z_x z^{-1}, at -1 in t with residue -z_t z^{-1}."""
    return (
        RationalCoeffs(poles=((1.0, (field.q11,)),)),
        RationalCoeffs(poles=((-1.0, (field.Q11,)),)),
    )


def chiral_plane(seed: ChiralSeed, grid: GridSpec, order: Literal["t_first", "x_first"] = "t_first", tol: Tolerances | None = None) -> GbdtPlane:
    x_coeffs, t_coeffs = chiral_coeffs(seed.field)
    return evolve_plane(
        x_coeffs, t_coeffs, seed.A1, seed.A2, seed.S0, seed.Pi1, seed.Pi2, grid,
        order=order, origin=(0.0, 0.0), tol=tol,
    )


def chiral_transform(seed: ChiralSeed, grid: GridSpec, tol: Tolerances | None = None) -> SolutionGrid:
    """
    z~ = w_A(x, t, 0) z over a 2-D grid.

    Samples where S or w_A(x, t, 0) is singular are emitted as NaN.
    """
    tol = resolve(tol)
    if not grid.is_2d:
        raise SeedValidationError("Chiral fields need a 2-D grid")
    plane = chiral_plane(seed, grid, tol=tol)
    xs, ts = grid.xs, grid.ts
    m = seed.m
    values = np.empty((len(ts), len(xs), m, m), dtype=np.complex128)
    min_det = np.inf
    for it, t in enumerate(ts):
        for ix, x in enumerate(xs):
            try:
                w = transfer_eval(plane.node(it, ix), 0.0, tol)
            except SingularMatrixError:
                values[it, ix] = np.nan
                continue
            det = abs(np.linalg.det(w))
            min_det = min(min_det, det)
            values[it, ix] = w @ seed.field.z(x, t) if det > 1 / tol.cond_cap else np.nan
    flagged = int(np.sum(~np.all(np.isfinite(values), axis=(2, 3))))
    if flagged:
        logger.warning("%d chiral samples flagged where S or w_A is singular", flagged)
    return SolutionGrid(
        system="chiral",
        grid=grid,
        values=values,
        metadata={
            "seed_field": seed.field.name,
            "min_abs_det_w": float(min_det),
            "identity_residual": float(np.max(plane.identity_residuals())),
        },
    )


def chiral_residual_at(z: CMat, z_x: CMat, z_t: CMat, z_xt: CMat) -> float:
    """||2 z_xt - z_x z^{-1} z_t - z_t z^{-1} z_x||."""
    zi = inv(z)
    return fnorm(2 * z_xt - z_x @ zi @ z_t - z_t @ zi @ z_x)
