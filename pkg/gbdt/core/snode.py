"""
S-nodes

An S-node is a quintuple (A1, A2, S, Pi1, Pi2) with A1 S - S A2 = Pi1 Pi2*.
It generates the transfer matrix function

    w_A(lambda) = I - Pi2* S^{-1} (A1 - lambda I)^{-1} Pi1

whose inverse is I + Pi2* (A2 - lambda I)^{-1} S^{-1} Pi1. Nodes with
block-triangular A1, A2 factorize into two smaller nodes, and two nodes
compose into one coupled node.
"""

import logging
from dataclasses import dataclass, fields
from typing import Any

import numpy as np

from ..config import Tolerances, resolve
from ..errors import SeedValidationError, SpectralOverlapError
from ..models import decode_matrix, encode_matrix
from .matcore import CMat, adj, eye, fnorm, inv, require_square, solve_linear, zeros

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SNode:
    """Node data; the identity is checked on construction."""
    A1: CMat
    A2: CMat
    S: CMat
    Pi1: CMat
    Pi2: CMat

    def __post_init__(self) -> None:
        self._check_shapes()
        residual = verify_identity(self)
        if residual > resolve(None).node_identity_rtol * identity_scale(self):
            raise SeedValidationError(f"Node identity A1 S - S A2 = Pi1 Pi2* violated (residual {residual:.3e})")

    def _check_shapes(self) -> None:
        n = require_square(self.A1, "A1")
        if self.A2.shape != (n, n) or self.S.shape != (n, n):
            raise SeedValidationError(f"A2 and S must be {n}x{n}")
        if self.Pi1.shape[0] != n or self.Pi2.shape != self.Pi1.shape:
            raise SeedValidationError(f"Pi1 and Pi2 must both be {n}x{self.Pi1.shape[1]}")

    @classmethod
    def new_unchecked(cls, A1: CMat, A2: CMat, S: CMat, Pi1: CMat, Pi2: CMat) -> "SNode":
        """Build without the identity check (intermediate ODE states)."""
        node = cls.__new__(cls)
        for name, value in zip(("A1", "A2", "S", "Pi1", "Pi2"), (A1, A2, S, Pi1, Pi2)):
            object.__setattr__(node, name, value)
        node._check_shapes()
        return node

    @classmethod
    def empty(cls, m: int) -> "SNode":
        return cls.new_unchecked(zeros(0, 0), zeros(0, 0), zeros(0, 0), zeros(0, m), zeros(0, m))

    @property
    def n(self) -> int:
        return self.A1.shape[0]

    @property
    def m(self) -> int:
        return self.Pi1.shape[1]

    def to_dict(self) -> dict[str, Any]:
        return {f.name: encode_matrix(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SNode":
        return cls(**{f.name: decode_matrix(data[f.name]) for f in fields(cls)})


def identity_scale(node: SNode) -> float:
    scale = (
        fnorm(node.A1) * fnorm(node.S)
        + fnorm(node.S) * fnorm(node.A2)
        + fnorm(node.Pi1) * fnorm(node.Pi2)
    )
    return max(scale, 1.0)


def verify_identity(node: SNode) -> float:
    """||A1 S - S A2 - Pi1 Pi2*||_F."""
    if node.n == 0:
        return 0.0
    return fnorm(node.A1 @ node.S - node.S @ node.A2 - node.Pi1 @ adj(node.Pi2))


def _check_off_spectrum(a: CMat, lam: complex, tol: Tolerances) -> None:
    eig = np.linalg.eigvals(a)
    if np.min(np.abs(eig - lam)) < tol.pole_distance * max(1.0, fnorm(a)):
        raise SpectralOverlapError(f"lambda={lam} lies on the node spectrum")


def transfer_eval(node: SNode, lam: complex, tol: Tolerances | None = None) -> CMat:
    """w_A(lambda) = I - Pi2* S^{-1} (A1 - lambda I)^{-1} Pi1."""
    tol = resolve(tol)
    if node.n == 0:
        return eye(node.m)
    _check_off_spectrum(node.A1, lam, tol)
    y = solve_linear(node.A1 - lam * eye(node.n), node.Pi1, tol)
    return eye(node.m) - adj(node.Pi2) @ solve_linear(node.S, y, tol)


def transfer_inverse_eval(node: SNode, lam: complex, tol: Tolerances | None = None) -> CMat:
    """w_A(lambda)^{-1} = I + Pi2* (A2 - lambda I)^{-1} S^{-1} Pi1."""
    tol = resolve(tol)
    if node.n == 0:
        return eye(node.m)
    _check_off_spectrum(node.A2, lam, tol)
    y = solve_linear(node.S, node.Pi1, tol)
    return eye(node.m) + adj(node.Pi2) @ solve_linear(node.A2 - lam * eye(node.n), y, tol)


def factorize(node: SNode, n1: int, tol: Tolerances | None = None) -> tuple[SNode, SNode]:
    """
    Split w_A = w_2 w_1 at block size n1.

    A1 must be block lower triangular and A2 block upper triangular at the
    split. The second factor carries the Schur complement
    S22 - S21 S11^{-1} S12.
    """
    tol = resolve(tol)
    n = node.n
    if not 0 < n1 <= n:
        raise SeedValidationError(f"Split n1={n1} outside 1..{n}")
    if n1 == n:
        return node, SNode.empty(node.m)
    if np.max(np.abs(node.A1[:n1, n1:])) > tol.triangular_atol:
        raise SeedValidationError("A1 is not block lower triangular at the split")
    if np.max(np.abs(node.A2[n1:, :n1])) > tol.triangular_atol:
        raise SeedValidationError("A2 is not block upper triangular at the split")

    s11, s12 = node.S[:n1, :n1], node.S[:n1, n1:]
    s21, s22 = node.S[n1:, :n1], node.S[n1:, n1:]
    s11_inv = inv(s11, tol)
    schur = s22 - s21 @ s11_inv @ s12
    first = SNode(
        A1=node.A1[:n1, :n1],
        A2=node.A2[:n1, :n1],
        S=s11,
        Pi1=node.Pi1[:n1],
        Pi2=node.Pi2[:n1],
    )
    second = SNode(
        A1=node.A1[n1:, n1:],
        A2=node.A2[n1:, n1:],
        S=schur,
        Pi1=node.Pi1[n1:] - s21 @ s11_inv @ node.Pi1[:n1],
        Pi2=node.Pi2[n1:] - adj(s11_inv @ s12) @ node.Pi2[:n1],
    )
    logger.debug("Factorized node of order %d at n1=%d", n, n1)
    return first, second


def compose(node1: SNode, node2: SNode, tol: Tolerances | None = None) -> SNode:
    """
    Coupled node with S = diag(S1, S2) whose transfer function is w_2 w_1.

    The coupling blocks are A1[2,1] = Pi1^(2) Pi2^(1)* S1^{-1} and
    A2[1,2] = -S1^{-1} Pi1^(1) Pi2^(2)*.
    """
    tol = resolve(tol)
    if node1.m != node2.m:
        raise SeedValidationError(f"Incompatible node widths {node1.m} and {node2.m}")
    if node1.n == 0:
        return node2
    if node2.n == 0:
        return node1
    n1, n2 = node1.n, node2.n
    s1_inv = inv(node1.S, tol)
    a21 = node2.Pi1 @ adj(node1.Pi2) @ s1_inv
    b12 = -s1_inv @ node1.Pi1 @ adj(node2.Pi2)
    return SNode(
        A1=np.block([[node1.A1, zeros(n1, n2)], [a21, node2.A1]]),
        A2=np.block([[node1.A2, b12], [zeros(n2, n1), node2.A2]]),
        S=np.block([[node1.S, zeros(n1, n2)], [zeros(n2, n1), node2.S]]),
        Pi1=np.vstack([node1.Pi1, node2.Pi1]),
        Pi2=np.vstack([node1.Pi2, node2.Pi2]),
    )
