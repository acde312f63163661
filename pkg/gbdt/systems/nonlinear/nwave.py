"""
N-wave equation

    [D, xi_t] - [D_hat, xi_x] = [[D, xi], [D_hat, xi]],  xi* = B xi B,

solved explicitly from the trivial solution xi = 0. Pi has the closed form

    Pi(x, t) = [exp(-i(d_1 x + d_hat_1 t) A) f_1, ..., exp(-i(d_m x + d_hat_m t) A) f_m]

and S follows from A S - S A* = i Pi B Pi* (or from S_x = Pi D B Pi*,
S_t = Pi D_hat B Pi* when the spectra of A and A* meet). With B = I and
d_1 > ... > d_m > 0 the module also provides the Weyl function, its evolution
in t and the inverse map.
"""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray

from ...config import Tolerances, resolve
from ...core.gbdt_core import GbdtPlane, RationalCoeffs, const, evolve_plane
from ...core.matcore import (
    ADAPTIVE,
    CMat,
    adj,
    condition,
    eye,
    expm,
    fnorm,
    hermitian_part,
    integrate_matrix_ode,
    is_posdef,
    solve_linear,
    solve_sylvester,
    spectral_separation,
)
from ...core.realization import Realization, evaluate, minimal_realize
from ...core.solution import SolutionGrid
from ...errors import SeedValidationError, SingularMatrixError
from ...models import GridSpec, NWaveSeedPayload, decode_matrix, encode_matrix
from ..dirac import halfplane_points

logger = logging.getLogger(__name__)

Convention = Literal["gauge", "weyl"]


@dataclass(frozen=True)
class NWaveSeed:
    """Parameter matrices A, S(0,0), Pi(0,0) with diagonals D, D_hat and signature B."""
    A: CMat
    S0: CMat
    Pi0: CMat
    D: NDArray[np.float64]
    D_hat: NDArray[np.float64]
    B: NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        n, m = self.Pi0.shape
        if self.A.shape != (n, n) or self.S0.shape != (n, n):
            raise SeedValidationError(f"A and S0 must be {n}x{n}")
        if self.D.shape != (m,) or self.D_hat.shape != (m,):
            raise SeedValidationError(f"D and D_hat must have {m} entries")
        if self.B is None:
            object.__setattr__(self, "B", np.ones(m))
        if self.B.shape != (m,) or not np.all(np.abs(self.B) == 1):
            raise SeedValidationError("B must be a diagonal of +1/-1 entries")
        tol = resolve(None)
        if fnorm(self.S0 - adj(self.S0)) > tol.hermitian_rtol * max(1.0, fnorm(self.S0)):
            raise SeedValidationError("S(0,0) must be Hermitian")
        residual = identity_residual(self, self.Pi0, self.S0)
        if residual > tol.seed_identity_rtol:
            raise SeedValidationError(f"Seed identity A S - S A* = i Pi B Pi* violated (relative residual {residual:.3e})")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.Pi0.shape[1]

    @property
    def Bm(self) -> CMat:
        return np.diag(self.B).astype(np.complex128)

    @property
    def weyl_ready(self) -> bool:
        """B = I and d_1 > ... > d_m > 0."""
        return bool(np.all(self.B == 1) and np.all(np.diff(self.D) < 0) and self.D[-1] > 0)

    @classmethod
    def build(cls, A: Any, Pi0: Any, D: Sequence[float], D_hat: Sequence[float], S0: Any = None, B: Sequence[float] | None = None) -> "NWaveSeed":
        a = np.atleast_2d(np.asarray(A, dtype=np.complex128))
        pi0 = np.asarray(Pi0, dtype=np.complex128)
        if pi0.ndim != 2:
            pi0 = pi0.reshape(a.shape[0], -1)
        b = np.ones(pi0.shape[1]) if B is None else np.asarray(B, dtype=np.float64)
        s0 = solve_identity(a, pi0, b) if S0 is None else np.atleast_2d(np.asarray(S0, dtype=np.complex128))
        return cls(a, s0, pi0, np.asarray(D, dtype=np.float64), np.asarray(D_hat, dtype=np.float64), b)

    @classmethod
    def from_payload(cls, data: dict[str, Any]) -> "NWaveSeed":
        payload = NWaveSeedPayload(**data)
        s0 = None if payload.S0 is None else decode_matrix(payload.S0)
        return cls.build(decode_matrix(payload.A), decode_matrix(payload.Pi0), payload.D, payload.D_hat, s0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "A": encode_matrix(self.A),
            "S0": encode_matrix(self.S0),
            "Pi0": encode_matrix(self.Pi0),
            "D": self.D.tolist(),
            "D_hat": self.D_hat.tolist(),
        }


def solve_identity(a: CMat, pi: CMat, b: NDArray[np.float64], tol: Tolerances | None = None) -> CMat:
    """S from A S - S A* = i Pi B Pi*."""
    rhs = 1j * pi @ np.diag(b) @ adj(pi)
    return hermitian_part(solve_sylvester(a, adj(a), rhs, tol))


def identity_residual(seed: NWaveSeed, pi: CMat, s: CMat) -> float:
    if seed.n == 0:
        return 0.0
    lhs = seed.A @ s - s @ adj(seed.A)
    scale = max(1.0, 2 * fnorm(seed.A) * fnorm(s) + fnorm(pi) ** 2)
    return fnorm(lhs - 1j * pi @ seed.Bm @ adj(pi)) / scale


def pi_at(seed: NWaveSeed, x: float, t: float) -> CMat:
    cols = [expm(seed.A, -1j * (d * x + dh * t)) @ seed.Pi0[:, k] for k, (d, dh) in enumerate(zip(seed.D, seed.D_hat))]
    return np.stack(cols, axis=1) if cols else seed.Pi0.copy()


def _closed_form(seed: NWaveSeed, tol: Tolerances) -> bool:
    return spectral_separation(seed.A, adj(seed.A)) >= tol.closed_form_gap * max(1.0, fnorm(seed.A))


def _sweep(rhs: Callable[[float, list[CMat]], list[CMat]], s0: CMat, points: NDArray[np.float64], tol: Tolerances) -> list[NDArray[np.complex128]]:
    """Carry S from 0 to points[0], then integrate through the points."""
    (head,) = integrate_matrix_ode(rhs, [s0], [0.0, float(points[0])], method=ADAPTIVE, tol=tol)
    return integrate_matrix_ode(rhs, [head[-1]], points, method=ADAPTIVE, tol=tol)


def s_plane(seed: NWaveSeed, xs: NDArray[np.float64], ts: NDArray[np.float64], tol: Tolerances | None = None) -> tuple[NDArray[np.complex128], str]:
    """S over the (t, x) grid, indexed [t, x], and the path used."""
    tol = resolve(tol)
    n = seed.n
    out = np.empty((len(ts), len(xs), n, n), dtype=np.complex128)
    if _closed_form(seed, tol):
        for it, t in enumerate(ts):
            for ix, x in enumerate(xs):
                out[it, ix] = solve_identity(seed.A, pi_at(seed, x, t), seed.B, tol)
        return out, "closed_form"

    logger.debug("N-wave S by integration: spectra of A and A* are not separated")
    d, dh = np.diag(seed.D * seed.B), np.diag(seed.D_hat * seed.B)
    s_t = lambda x: lambda t, st: [pi_at(seed, x, t) @ dh @ adj(pi_at(seed, x, t))]  # noqa: E731
    s_x = lambda t: lambda x, st: [pi_at(seed, x, t) @ d @ adj(pi_at(seed, x, t))]  # noqa: E731
    (line,) = _sweep(s_t(0.0), seed.S0, ts, tol)
    for it, t in enumerate(ts):
        (out[it],) = _sweep(s_x(t), line[it], xs, tol)
    return out, "ode"


def xi_from(seed: NWaveSeed, pi: CMat, s: CMat, convention: Convention = "gauge", tol: Tolerances | None = None) -> CMat:
    """-B Pi* S^{-1} Pi (gauge convention) or Pi* S^{-1} Pi (Weyl convention)."""
    core = adj(pi) @ solve_linear(s, pi, tol)
    return -seed.Bm @ core if convention == "gauge" else core


def nwave_solution(
    seed: NWaveSeed,
    grid: GridSpec,
    convention: Convention = "gauge",
    tol: Tolerances | None = None,
) -> SolutionGrid:
    """
    Sample xi~(x, t) over a 2-D grid.

    Samples where S is numerically singular are emitted as NaN.
    """
    tol = resolve(tol)
    if not grid.is_2d:
        raise SeedValidationError("N-wave solutions need a 2-D grid")
    xs, ts = grid.xs, grid.ts
    s_all, path = s_plane(seed, xs, ts, tol)
    values = np.empty((len(ts), len(xs), seed.m, seed.m), dtype=np.complex128)
    symmetry = 0.0
    worst_identity = 0.0
    for it, t in enumerate(ts):
        for ix, x in enumerate(xs):
            s = s_all[it, ix]
            pi = pi_at(seed, x, t)
            worst_identity = max(worst_identity, identity_residual(seed, pi, s))
            if seed.n and condition(s) > tol.cond_cap:
                values[it, ix] = np.nan
                continue
            xi = xi_from(seed, pi, s, convention, tol)
            values[it, ix] = xi
            symmetry = max(symmetry, fnorm(adj(xi) - seed.Bm @ xi @ seed.Bm))
    flagged = int(np.sum(~np.all(np.isfinite(values), axis=(2, 3))))
    if flagged:
        logger.warning("%d N-wave samples flagged where S is singular", flagged)
    return SolutionGrid(
        system="nwave",
        grid=grid,
        values=values,
        metadata={
            "convention": convention,
            "s_path": path,
            "symmetry_residual": symmetry,
            "identity_residual": worst_identity,
            "D": seed.D.tolist(),
            "D_hat": seed.D_hat.tolist(),
        },
    )


def engine_coeffs(seed: NWaveSeed) -> tuple[RationalCoeffs, RationalCoeffs]:
    """q1 = -iD along x and Q1 = -iD_hat along t, trivial background."""
    x_coeffs = RationalCoeffs(poly=(None, const(-1j * np.diag(seed.D).astype(np.complex128))))
    t_coeffs = RationalCoeffs(poly=(None, const(-1j * np.diag(seed.D_hat).astype(np.complex128))))
    return x_coeffs, t_coeffs


def engine_plane(
    seed: NWaveSeed,
    grid: GridSpec,
    order: Literal["t_first", "x_first"] = "t_first",
    tol: Tolerances | None = None,
) -> GbdtPlane:
    """Evolve the node (A, A*, S, Pi, -i Pi B) through the general engine from (0, 0)."""
    x_coeffs, t_coeffs = engine_coeffs(seed)
    return evolve_plane(
        x_coeffs,
        t_coeffs,
        seed.A,
        adj(seed.A),
        seed.S0,
        seed.Pi0,
        -1j * seed.Pi0 @ seed.Bm,
        grid,
        order=order,
        origin=(0.0, 0.0),
        tol=tol,
    )


def compatibility_deviation(seed: NWaveSeed, grid: GridSpec, tol: Tolerances | None = None) -> float:
    """Largest difference between the t-first and x-first sweeps (Pi and S)."""
    a = engine_plane(seed, grid, "t_first", tol)
    b = engine_plane(seed, grid, "x_first", tol)
    return float(max(np.max(np.abs(a.Pi1 - b.Pi1)), np.max(np.abs(a.S - b.S))))


# ---------------------------------------------------------------------------
# Weyl function
# ---------------------------------------------------------------------------


def nwave_weyl(seed: NWaveSeed, t: float = 0.0, tol: Tolerances | None = None) -> Realization:
    """
    phi(t, lambda) = I - i Pi(0,t)* S(0,t)^{-1} (A - lambda)^{-1} Pi(0,t).

    Raises:
        SeedValidationError: B != I or D is not strictly decreasing and positive
        SingularMatrixError: S(0, t) is not positive
    """
    tol = resolve(tol)
    if not seed.weyl_ready:
        raise SeedValidationError("Weyl functions need B = I and d_1 > ... > d_m > 0")
    m = seed.m
    if seed.n == 0:
        return Realization.build([], [], [], eye(m))
    pi = pi_at(seed, 0.0, t)
    if t == 0.0:
        s = seed.S0
    else:
        s, _ = s_plane(seed, np.array([0.0]), np.array([t]), tol)
        s = s[0, 0]
    if not is_posdef(s, tol):
        raise SingularMatrixError(f"S(0, {t}) is not positive")
    return Realization(seed.A.copy(), pi, 1j * adj(solve_linear(s, pi, tol)), eye(m))


def weyl_evolution(seed: NWaveSeed, ts: Sequence[float], tol: Tolerances | None = None) -> list[Realization]:
    """Weyl function at each time; stops with an error where S(0, t) loses positivity."""
    return [nwave_weyl(seed, float(t), tol) for t in ts]


def weyl_property_residuals(phi: Realization, count: int = 20, tol: Tolerances | None = None) -> dict[str, float]:
    """
    Sampled defects of phi(l) phi(conj l)* = I, ||phi|| <= 1 on the lower
    half-plane and phi(infinity) = I.
    """
    tol = resolve(tol)
    m = phi.shape[0]
    points = np.concatenate([halfplane_points("lower", count // 2, np.pi / 3), halfplane_points("lower", count - count // 2, 2 * np.pi / 3)])
    symmetry = 0.0
    contraction = 0.0
    for lam in points:
        value = evaluate(phi, lam, tol)
        mirror = evaluate(phi, np.conj(lam), tol)
        symmetry = max(symmetry, fnorm(value @ adj(mirror) - eye(m)))
        contraction = max(contraction, float(np.linalg.norm(value, 2)) - 1.0)
    return {"symmetry": symmetry, "contraction": contraction, "infinity": fnorm(phi.D - eye(m))}


def nwave_inverse(
    phi: Realization,
    D: Sequence[float],
    D_hat: Sequence[float] | None = None,
    tol: Tolerances | None = None,
) -> NWaveSeed:
    """
    Recover the seed generating a rational Weyl function.

    D (and D_hat for the time evolution) are part of the system, not of phi,
    so they are passed alongside it.

    Raises:
        SeedValidationError: phi violates the sampled Weyl properties, or the
            state matrix of its minimal realization is not in the open upper
            half-plane
    """
    tol = resolve(tol)
    m = phi.shape[0]
    d = np.asarray(D, dtype=np.float64)
    dh = np.zeros(m) if D_hat is None else np.asarray(D_hat, dtype=np.float64)
    checks = weyl_property_residuals(phi, tol=tol)
    if checks["infinity"] > 1e-9:
        raise SeedValidationError("Weyl function must tend to I at infinity")
    if checks["symmetry"] > 1e-8:
        raise SeedValidationError(f"phi(l) phi(conj l)* != I (defect {checks['symmetry']:.3e})")
    if checks["contraction"] > 1e-8:
        raise SeedValidationError("Weyl function is not contractive on the lower half-plane")
    r = minimal_realize(phi, tol)
    if r.order == 0:
        return NWaveSeed.build(np.zeros((0, 0)), np.zeros((0, m)), d, dh)
    eig = np.linalg.eigvals(r.A)
    if np.min(eig.imag) <= 0:
        raise SeedValidationError("State matrix spectrum must lie in the open upper half-plane")
    s0 = solve_identity(r.A, r.B, np.ones(m), tol)
    if not is_posdef(s0, tol):
        raise SeedValidationError("Identity solution S(0) is not positive")
    return NWaveSeed(r.A.copy(), s0, r.B.copy(), d, dh)
