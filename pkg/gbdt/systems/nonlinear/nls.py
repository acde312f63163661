"""
Focusing nonlinear Schrödinger equation

    2 v_t + i (v_xx + 2 v v* v) = 0

n-soliton solutions on the zero background and n-modulation solutions on the
plane-wave background v = e^{-it}, both for p = 1 with a diagonal parameter
matrix A = diag(a_1, ..., a_n). The rows of Pi are

    psi_k(x, t) = (u(x, t, conj a_k) f_k)*

with u the fundamental solution of the background auxiliary systems, S has
the entries s_kj = i psi_k psi_j* / (a_k - conj a_j) and

    v~ = v + 2 [1 0] Pi* S^{-1} Pi [0; 1].
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from gbdt._compat import StrEnum
from fractions import Fraction
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import quad_vec

from ...config import Tolerances, resolve
from ...core.matcore import CMat, adj, condition, solve_linear
from ...core.solution import SolutionGrid
from ...errors import ConvergenceError, SeedValidationError
from ...models import GridSpec, NlsSeedPayload, decode_complex, encode_complex
from ..dirac import j_matrix

logger = logging.getLogger(__name__)

J2 = j_matrix(1, 1)


class Background(StrEnum):
    ZERO = "zero"
    PLANE_WAVE = "plane_wave"


def background_v(background: Background, t: float) -> complex:
    return 0j if background is Background.ZERO else complex(np.exp(-1j * t))


def _root(lam: complex) -> complex:
    """Principal branch of sqrt(1 + lambda^2)."""
    return complex(np.sqrt(1 + complex(lam) ** 2))


def c0(lam: complex) -> CMat:
    r = _root(lam)
    return np.array([[1, 1], [-1j * (r + lam), 1j * (r - lam)]], dtype=np.complex128)


def c1(lam: complex) -> CMat:
    return -1j * _root(lam) * J2


def background_u(background: Background, x: float, t: float, lam: complex) -> CMat:
    """
    Fundamental solution of u_x = G u, u_t = F u for the background.

    Zero background: exp(i(x lambda + t lambda^2) j). Plane wave:
    exp(-itj/2) C0(lambda) exp((x + lambda t) C1(lambda)).
    """
    if background is Background.ZERO:
        phase = 1j * (x * lam + t * lam**2)
        return np.diag([np.exp(phase), np.exp(-phase)])
    e = np.diag([np.exp(-1j * t / 2), np.exp(1j * t / 2)])
    return e @ c0(lam) @ np.diag(np.exp((x + lam * t) * np.diag(c1(lam))))


def system_matrices(v: complex, v_x: complex, lam: complex) -> tuple[CMat, CMat]:
    """G = i lambda j + j V and F = i(lambda^2 j - i lambda j V - (V_x + j V^2)/2)."""
    V = np.array([[0, v], [np.conj(v), 0]], dtype=np.complex128)
    V_x = np.array([[0, v_x], [np.conj(v_x), 0]], dtype=np.complex128)
    g = 1j * lam * J2 + J2 @ V
    f = 1j * (lam**2 * J2 - 1j * lam * J2 @ V - (V_x + J2 @ V @ V) / 2)
    return g, f


@dataclass(frozen=True)
class NlsSeed:
    """Diagonal entries a_k, vectors f_k in C^2 and the background."""
    a: NDArray[np.complex128]
    f: NDArray[np.complex128]
    background: Background = Background.ZERO

    def __post_init__(self) -> None:
        n = self.a.shape[0]
        if self.a.shape != (n,) or self.f.shape != (n, 2):
            raise SeedValidationError("a must be a vector and f an n x 2 array")
        if np.any(np.linalg.norm(self.f, axis=1) == 0):
            raise SeedValidationError("Every f_k must be nonzero")
        gaps = np.abs(self.a[:, None] - np.conj(self.a)[None, :])
        if n and np.min(gaps) < 1e-12:
            raise SeedValidationError("a_k must differ from every conj(a_l)")

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def A(self) -> CMat:
        return np.diag(self.a)

    @property
    def globally_positive(self) -> bool:
        """sigma(A) in the open upper half-plane with distinct a_k, so S > 0 everywhere."""
        return bool(np.all(self.a.imag > 0) and len(set(self.a.tolist())) == self.n)

    @classmethod
    def build(cls, a: Sequence[complex], f: Any, background: Background | str = Background.ZERO) -> "NlsSeed":
        arr = np.asarray(a, dtype=np.complex128).reshape(-1)
        return cls(arr, np.asarray(f, dtype=np.complex128).reshape(len(arr), 2), Background(background))

    @classmethod
    def from_payload(cls, data: dict[str, Any]) -> "NlsSeed":
        payload = NlsSeedPayload(**data)
        a = [decode_complex(z) for z in payload.a]
        f = [[decode_complex(z) for z in vec] for vec in payload.f]
        return cls.build(a, f, payload.background)

    def to_dict(self) -> dict[str, Any]:
        return {
            "a": [encode_complex(z) for z in self.a],
            "f": [[encode_complex(z) for z in vec] for vec in self.f],
            "background": self.background.value,
        }


def pi_at(seed: NlsSeed, x: float, t: float) -> CMat:
    """Stack of rows psi_k = (u(x, t, conj a_k) f_k)*."""
    rows = [np.conj(background_u(seed.background, x, t, np.conj(a)) @ f) for a, f in zip(seed.a, seed.f)]
    return np.array(rows, dtype=np.complex128).reshape(seed.n, 2)


def s_from(seed: NlsSeed, pi: CMat) -> CMat:
    """s_kj = i psi_k psi_j* / (a_k - conj a_j)."""
    return 1j * (pi @ adj(pi)) / (seed.a[:, None] - np.conj(seed.a)[None, :])


def residue_gramian(seed: NlsSeed, pi: CMat, tol: Tolerances | None = None) -> CMat:
    """
    S = (1/2 pi) int (A - lambda)^{-1} Pi Pi* (A* - lambda)^{-1} d lambda over the real line.

    For sigma(A) in the open upper half-plane the residue theorem gives back
    s_from, and the integral shows S >= 0.

    Raises:
        SeedValidationError: some a_k is not in the open upper half-plane
        ConvergenceError: quad_vec did not reach the requested accuracy
    """
    tol = resolve(tol)
    if not np.all(seed.a.imag > 0):
        raise SeedValidationError("The Gramian integral needs every a_k in the upper half-plane")
    n = seed.n
    r = pi @ adj(pi)

    def integrand(lam: float) -> NDArray[np.float64]:
        m = r / ((seed.a - lam)[:, None] * (np.conj(seed.a) - lam)[None, :])
        return np.concatenate([m.real.ravel(), m.imag.ravel()])

    values, error, info = quad_vec(
        integrand, -np.inf, np.inf, epsabs=tol.quad_atol, epsrel=tol.quad_rtol, full_output=True
    )
    if not info.success:
        raise ConvergenceError(f"Gramian quadrature stopped at error {error:.3e}: {info.message}")
    logger.debug("Gramian quadrature error %.3e after %d intervals", error, info.intervals.shape[0])
    return (values[: n * n] + 1j * values[n * n :]).reshape(n, n) / (2 * np.pi)


def identity_residual(seed: NlsSeed, pi: CMat, s: CMat) -> float:
    """Relative defect of A S - S A* = i Pi Pi*."""
    if seed.n == 0:
        return 0.0
    defect = seed.A @ s - s @ adj(seed.A) - 1j * pi @ adj(pi)
    return float(np.linalg.norm(defect)) / max(1.0, float(np.linalg.norm(pi)) ** 2)


def potential_at(seed: NlsSeed, x: float, t: float, tol: Tolerances | None = None) -> complex:
    v = background_v(seed.background, t)
    if seed.n == 0:
        return v
    pi = pi_at(seed, x, t)
    s = s_from(seed, pi)
    return complex(v + 2 * (adj(pi[:, :1]) @ solve_linear(s, pi[:, 1:], tol))[0, 0])


def nls_solution(seed: NlsSeed, grid: GridSpec, tol: Tolerances | None = None) -> SolutionGrid:
    """Sample v~(x, t) over a 2-D grid; samples with singular S are NaN."""
    tol = resolve(tol)
    if not grid.is_2d:
        raise SeedValidationError("NLS solutions need a 2-D grid")
    xs, ts = grid.xs, grid.ts
    values = np.empty((len(ts), len(xs), 1, 1), dtype=np.complex128)
    min_eig = math.inf
    worst_identity = 0.0
    for it, t in enumerate(ts):
        for ix, x in enumerate(xs):
            pi = pi_at(seed, x, t)
            s = s_from(seed, pi)
            worst_identity = max(worst_identity, identity_residual(seed, pi, s))
            if seed.n and condition(s) > tol.cond_cap:
                values[it, ix] = np.nan
                continue
            if seed.n:
                min_eig = min(min_eig, float(np.min(np.linalg.eigvalsh((s + adj(s)) / 2))))
                values[it, ix, 0, 0] = background_v(seed.background, t) + 2 * (adj(pi[:, :1]) @ solve_linear(s, pi[:, 1:], tol))[0, 0]
            else:
                values[it, ix, 0, 0] = background_v(seed.background, t)
    flagged = int(np.sum(~np.isfinite(values[..., 0, 0])))
    if flagged:
        logger.warning("%d NLS samples flagged where S is singular", flagged)
    return SolutionGrid(
        system="nls",
        grid=grid,
        values=values,
        metadata={
            "background": seed.background.value,
            "globally_positive": seed.globally_positive,
            "min_eigenvalue_S": None if seed.n == 0 else min_eig,
            "identity_residual": worst_identity,
        },
    )


# ---------------------------------------------------------------------------
# n-modulation solutions
# ---------------------------------------------------------------------------


def modulation_seed(r1: Sequence[int], r2: Sequence[int], f: Any) -> NlsSeed:
    """
    Plane-wave seed with a_k = i r1_k / r2_k.

    r1_k^2 - r2_k^2 must be the square of a positive integer l_k.
    """
    a = []
    for p, q in zip(r1, r2):
        _modulation_l(p, q)
        a.append(1j * p / q)
    return NlsSeed.build(a, f, Background.PLANE_WAVE)


def _modulation_l(r1: int, r2: int) -> int:
    if r2 <= 0 or r1 <= r2:
        raise SeedValidationError(f"Need r1 > r2 > 0, got r1={r1}, r2={r2}")
    l = math.isqrt(r1 * r1 - r2 * r2)
    if l * l != r1 * r1 - r2 * r2:
        raise SeedValidationError(f"r1^2 - r2^2 = {r1 * r1 - r2 * r2} is not a perfect square")
    return l


def modulation_period(r1: Sequence[int], r2: Sequence[int]) -> float:
    """
    Common period in t of exp(+-it/2) and exp(+-i l_k r1_k t / r2_k^2).

    Periods are exact rational multiples of pi, so their least common multiple is too.
    """
    periods = [Fraction(4)]
    for p, q in zip(r1, r2):
        l = _modulation_l(p, q)
        periods.append(Fraction(2 * q * q, l * p))
    num = math.lcm(*(fr.numerator for fr in periods))
    den = math.gcd(*(fr.denominator for fr in periods))
    return float(Fraction(num, den)) * math.pi


def plane_wave_residual(x: float, t: float, lam: complex, h: float = 1e-4) -> float:
    """max(||u_x - G u||, ||u_t - F u||) for the plane-wave u, by central differences."""
    u = lambda xx, tt: background_u(Background.PLANE_WAVE, xx, tt, lam)  # noqa: E731
    g, f = system_matrices(np.exp(-1j * t), 0j, lam)
    du_x = (u(x + h, t) - u(x - h, t)) / (2 * h)
    du_t = (u(x, t + h) - u(x, t - h)) / (2 * h)
    base = u(x, t)
    return max(float(np.linalg.norm(du_x - g @ base)), float(np.linalg.norm(du_t - f @ base)))

