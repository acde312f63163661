"""
Realization

State-space realizations W(lambda) = D + C(lambda I - A)^{-1}B of proper
rational matrix functions: evaluation, Kalman-type minimality tests,
staircase reduction to a minimal realization, inversion and similarity.
"""

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..config import Tolerances, resolve
from ..errors import SeedValidationError, SingularMatrixError, SpectralOverlapError
from ..models import RealizationPayload, decode_matrix, encode_matrix
from .matcore import (
    CMat,
    adj,
    cmat,
    condition,
    eye,
    fnorm,
    krylov_rank,
    solve_linear,
    zeros,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Realization:
    """(A, B, C, D) with A n x n, B n x m1, C m2 x n, D m2 x m1."""
    A: CMat
    B: CMat
    C: CMat
    D: CMat

    def __post_init__(self) -> None:
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise SeedValidationError(f"A must be square, got {self.A.shape}")
        m2, m1 = self.D.shape
        if self.B.shape != (n, m1):
            raise SeedValidationError(f"B has shape {self.B.shape}, expected {(n, m1)}")
        if self.C.shape != (m2, n):
            raise SeedValidationError(f"C has shape {self.C.shape}, expected {(m2, n)}")

    @classmethod
    def build(cls, a: Any, b: Any, c: Any, d: Any) -> "Realization":
        """Coerce array-likes, keeping empty state spaces well shaped."""
        dd = cmat(d)
        m2, m1 = dd.shape
        aa = np.atleast_2d(np.asarray(a, dtype=np.complex128))
        n = aa.shape[0] if aa.size else 0
        return cls(
            A=cmat(a) if n else zeros(0, 0),
            B=cmat(b) if n else zeros(0, m1),
            C=np.asarray(c, dtype=np.complex128).reshape(m2, n) if n else zeros(m2, 0),
            D=dd,
        )

    @property
    def order(self) -> int:
        return self.A.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.D.shape

    def __call__(self, lam: complex) -> CMat:
        return evaluate(self, lam)

    def to_dict(self) -> dict[str, Any]:
        return {k: encode_matrix(getattr(self, k)) for k in ("A", "B", "C", "D")}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Realization":
        payload = RealizationPayload(**data)
        d = decode_matrix(payload.D)
        a = decode_matrix(payload.A)
        n = a.shape[0]
        return cls(
            A=a,
            B=decode_matrix(payload.B, (n, d.shape[1])),
            C=decode_matrix(payload.C, (d.shape[0], n)),
            D=d,
        )


def evaluate(r: Realization, lam: complex, tol: Tolerances | None = None) -> CMat:
    """
    W(lambda) = D + C(lambda I - A)^{-1}B.

    Raises:
        SpectralOverlapError: lambda lies on (or within tolerance of) sigma(A)
    """
    tol = resolve(tol)
    n = r.order
    if n == 0:
        return r.D.copy()
    eig = np.linalg.eigvals(r.A)
    if np.min(np.abs(eig - lam)) < tol.pole_distance * max(1.0, fnorm(r.A)):
        raise SpectralOverlapError(f"lambda={lam} is a pole of the realization")
    try:
        return r.D + r.C @ solve_linear(lam * eye(n) - r.A, r.B, tol)
    except SingularMatrixError as e:
        raise SpectralOverlapError(f"lambda={lam} is too close to a pole") from e


def is_controllable(a: CMat, b: CMat, tol: Tolerances | None = None) -> bool:
    """rank [B, AB, ..., A^{n-1}B] == n."""
    n = a.shape[0]
    if b.shape[0] != n:
        raise SeedValidationError(f"B has {b.shape[0]} rows, expected {n}")
    return krylov_rank(a, b, tol) == n


def is_observable(c: CMat, a: CMat, tol: Tolerances | None = None) -> bool:
    """Controllability of the dual pair (A*, C*)."""
    n = a.shape[0]
    if c.shape[1] != n:
        raise SeedValidationError(f"C has {c.shape[1]} columns, expected {n}")
    return krylov_rank(adj(a), adj(c), tol) == n


def _reachable_basis(a: CMat, b: CMat, tol: Tolerances) -> CMat:
    """
    Orthonormal basis of the controllable subspace by a block staircase.

    A direction is dropped only when the singular-value gap to the kept ones
    exceeds tol.rank_gap; otherwise the state is kept.
    """
    n = a.shape[0]
    basis = zeros(n, 0)
    block = b
    ref = max(fnorm(b), fnorm(a), 1e-300)
    while basis.shape[1] < n and block.size:
        block = block - basis @ (adj(basis) @ block)
        u, sv, _ = np.linalg.svd(block, full_matrices=False)
        if sv.size == 0:
            break
        keep = sv > tol.rank_rtol * ref
        dropped = sv[~keep]
        if dropped.size and keep.any() and sv[keep][-1] < tol.rank_gap * dropped[0]:
            keep = sv > dropped[0] / 2
        if not keep.any():
            break
        new = u[:, keep]
        basis = np.hstack([basis, new])
        # re-orthonormalize against accumulation error
        basis, _ = np.linalg.qr(basis)
        block = a @ new
    return basis[:, :n]


def minimal_realize(r: Realization, tol: Tolerances | None = None) -> Realization:
    """Remove uncontrollable then unobservable states; order equals the McMillan degree."""
    tol = resolve(tol)
    if r.order == 0:
        return r
    v = _reachable_basis(r.A, r.B, tol)
    a, b, c = adj(v) @ r.A @ v, adj(v) @ r.B, r.C @ v
    if a.shape[0]:
        w = _reachable_basis(adj(a), adj(c), tol)
        a, b, c = adj(w) @ a @ w, adj(w) @ b, c @ w
    m2, m1 = r.shape
    if a.shape[0] == 0:
        return Realization(zeros(0, 0), zeros(0, m1), zeros(m2, 0), r.D.copy())
    logger.debug("Minimal realization: order %d -> %d", r.order, a.shape[0])
    return Realization(a, b, c, r.D.copy())


def mcmillan_degree(r: Realization, tol: Tolerances | None = None) -> int:
    return minimal_realize(r, tol).order


def invert(r: Realization, tol: Tolerances | None = None) -> Realization:
    """W^{-1} = I - C(lambda - (A - BC))^{-1}B for D = I."""
    tol = resolve(tol)
    m2, m1 = r.shape
    if m1 != m2 or fnorm(r.D - eye(m1)) > tol.node_identity_rtol:
        raise SeedValidationError("invert requires D = I")
    return Realization(r.A - r.B @ r.C, r.B.copy(), -r.C, eye(m1))


def similar(r: Realization, t: CMat, tol: Tolerances | None = None) -> Realization:
    """(TAT^{-1}, TB, CT^{-1}, D)."""
    tol = resolve(tol)
    if t.shape != (r.order, r.order):
        raise SeedValidationError(f"T has shape {t.shape}, expected {(r.order, r.order)}")
    if condition(t) > tol.cond_cap:
        raise SingularMatrixError("Similarity matrix is singular")
    t_inv = solve_linear(t, eye(r.order), tol)
    return Realization(t @ r.A @ t_inv, t @ r.B, r.C @ t_inv, r.D.copy())


def cascade(outer: Realization, inner: Realization) -> Realization:
    """Realization of W_outer(lambda) W_inner(lambda)."""
    if outer.shape[1] != inner.shape[0]:
        raise SeedValidationError("Incompatible sizes for cascade")
    n1, n2 = outer.order, inner.order
    a = np.block([[outer.A, outer.B @ inner.C], [zeros(n2, n1), inner.A]])
    b = np.vstack([outer.B @ inner.D, inner.B])
    c = np.hstack([outer.C, outer.D @ inner.C])
    return Realization(a, b, c, outer.D @ inner.D)
