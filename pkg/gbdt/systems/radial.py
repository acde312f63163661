"""
Radial Dirac equation

    (d/dx + lambda q1 + q0(x)) u = 0,      q1 = -R,   R = [[0, 1], [-1, 0]],
    q0 = v_* sigma3 + R (v_e I + v_s sigma3),   v_* = kappa / x + v_a.

A transformation is fixed by A, S(x0) and Pi(x0) with Pi_x = A Pi q1 + Pi q0,
S_x = Pi Pi* and A S - S A* = Pi R Pi*. In terms of X = Pi* S^{-1} Pi

    q0~ = q0 + R X R* - X,    w_A(lambda) = I - R Pi* S^{-1} (A - lambda I)^{-1} Pi,

so v_* gains X22 - X11, v_s gains X12 + X21 and v_e is unchanged. Starting
from q0 = 0 with a block seed (A1, S1, Psi1; A2 lower triangular, Psi2) the
new coefficient has the singular part kappa/x sigma3, where the sign of
kappa = +-|kappa| follows from the parity of |kappa| and the orientation of
the first row of Psi2.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray

from ..config import Tolerances, resolve
from ..core.matcore import (
    ADAPTIVE,
    CMat,
    adj,
    exp_gramian,
    expm,
    eye,
    fnorm,
    grid_map,
    hermitian_part,
    integrate_matrix_ode,
    is_posdef,
    require_square,
    solve_linear,
    zeros,
)
from ..core.snode import SNode, factorize, transfer_eval
from ..core.solution import SolutionGrid
from ..errors import SeedValidationError, SingularMatrixError
from ..models import GridSpec, RadialSeedPayload, decode_matrix, encode_matrix

logger = logging.getLogger(__name__)

ROTATION = np.array([[0, 1], [-1, 0]], dtype=np.complex128)
EIGENBASIS = np.array([[1, 1], [-1j, 1j]], dtype=np.complex128) / math.sqrt(2)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=np.complex128)
Q1 = -ROTATION

CoefficientSampler = Callable[[float], CMat]
Orientation = Literal["first", "second"]


def coefficient(v_star: float, v_e: float = 0.0, v_s: float = 0.0) -> CMat:
    """q0 = v_* sigma3 + R (v_e I + v_s sigma3)."""
    return v_star * SIGMA3 + ROTATION @ (v_e * eye(2) + v_s * SIGMA3)


def coefficient_sampler(
    kappa: int = 0,
    v_a: Callable[[float], float] = lambda x: 0.0,
    v_e: Callable[[float], float] = lambda x: 0.0,
    v_s: Callable[[float], float] = lambda x: 0.0,
) -> CoefficientSampler:
    """x -> q0(x) from the angular term kappa/x and the three real potentials."""
    def q0(x: float) -> CMat:
        v_star = (kappa / x if kappa else 0.0) + v_a(x)
        return coefficient(v_star, v_e(x), v_s(x))
    return q0


def correction(x_mat: CMat) -> CMat:
    """R X R* - X = (X22 - X11) sigma3 - (X12 + X21) sigma1."""
    return ROTATION @ x_mat @ adj(ROTATION) - x_mat


def v_s_of(q: NDArray[np.complex128]) -> NDArray[np.float64]:
    """v_s from q0 (or a stack of them): q0_12 + q0_21 = -2 v_s."""
    return -np.real(q[..., 0, 1] + q[..., 1, 0]) / 2


def v_e_of(q: NDArray[np.complex128]) -> NDArray[np.float64]:
    return np.real(q[..., 0, 1] - q[..., 1, 0]) / 2


# ---------------------------------------------------------------------------
# Parity rule
# ---------------------------------------------------------------------------


def orientation_of(h: NDArray[np.complex128], atol: float = 1e-12) -> Orientation | None:
    """'first' for h = c[1, 0], 'second' for h = c[0, 1], None otherwise."""
    scale = float(np.max(np.abs(h)))
    if scale == 0.0:
        return None
    if abs(h[1]) <= atol * scale:
        return "first"
    if abs(h[0]) <= atol * scale:
        return "second"
    return None


def predicted_kappa(varkappa: int, orientation: Orientation) -> int:
    """+|kappa| for odd |kappa| with c[0, 1] or even |kappa| with c[1, 0], -|kappa| otherwise."""
    if varkappa == 0:
        return 0
    odd = varkappa % 2 == 1
    positive = (odd and orientation == "second") or (not odd and orientation == "first")
    return varkappa if positive else -varkappa


# ---------------------------------------------------------------------------
# Seed
# ---------------------------------------------------------------------------


def _decode(value: Any, empty_shape: tuple[int, int]) -> CMat:
    if value is None or (isinstance(value, list) and len(value) == 0):
        return zeros(*empty_shape)
    return decode_matrix(value)


@dataclass(frozen=True)
class RadialSeed:
    """
    Block seed of an explicit radial solution.

    A1 (m x m), S1 > 0 and Psi1 (m x 2) form the regular part; A2 is a lower
    triangular |kappa| x |kappa| matrix and Psi2 (|kappa| x 2) the part that
    produces the singular term. m = 0 is allowed.
    """
    kappa: int
    A1: CMat
    S1: CMat
    Psi1: CMat
    A2: CMat
    Psi2: CMat

    def __post_init__(self) -> None:
        tol = resolve(None)
        m, k = self.A1.shape[0], abs(self.kappa)
        require_square(self.A1, "A1")
        require_square(self.A2, "A2")
        if self.S1.shape != (m, m) or self.Psi1.shape != (m, 2):
            raise SeedValidationError(f"S1 must be {m}x{m} and Psi1 {m}x2")
        if self.A2.shape != (k, k) or self.Psi2.shape != (k, 2):
            raise SeedValidationError(f"A2 must be {k}x{k} and Psi2 {k}x2 for kappa={self.kappa}")
        if k and np.max(np.abs(np.triu(self.A2, 1))) > tol.triangular_atol:
            raise SeedValidationError("A2 must be lower triangular")
        if m:
            if not is_posdef(self.S1, tol):
                raise SeedValidationError("S1 must be positive definite")
            lhs = self.A1 @ self.S1 - self.S1 @ adj(self.A1)
            residual = fnorm(lhs - self.Psi1 @ ROTATION @ adj(self.Psi1))
            scale = max(1.0, 2 * fnorm(self.A1) * fnorm(self.S1) + fnorm(self.Psi1) ** 2)
            if residual > tol.seed_identity_rtol * scale:
                raise SeedValidationError(f"A1 S1 - S1 A1* = Psi1 R Psi1* violated (residual {residual:.3e})")
        if k:
            residual = fnorm(self.Psi2 @ ROTATION @ adj(self.Psi2))
            if residual > tol.seed_identity_rtol * max(1.0, fnorm(self.Psi2) ** 2):
                raise SeedValidationError(f"Psi2 R Psi2* = 0 violated (residual {residual:.3e})")
            orientation = orientation_of(self.Psi2[0])
            if orientation is None:
                raise SeedValidationError("The first row of Psi2 must be c[1, 0] or c[0, 1] with c != 0")
            expected = predicted_kappa(k, orientation)
            if expected != self.kappa:
                raise SeedValidationError(
                    f"First row of Psi2 oriented as {orientation!r} produces kappa={expected}, not {self.kappa}"
                )

    @property
    def m(self) -> int:
        return self.A1.shape[0]

    @property
    def varkappa(self) -> int:
        return abs(self.kappa)

    @property
    def n(self) -> int:
        return self.m + self.varkappa

    @property
    def R(self) -> CMat:
        """Coupling block Psi2 R Psi1* S1^{-1}."""
        if not self.m or not self.varkappa:
            return zeros(self.varkappa, self.m)
        return adj(solve_linear(self.S1, self.Psi1 @ adj(ROTATION) @ adj(self.Psi2)))

    @property
    def A(self) -> CMat:
        m, k = self.m, self.varkappa
        return np.block([[self.A1, zeros(m, k)], [self.R, self.A2]])

    @property
    def S0(self) -> CMat:
        out = zeros(self.n, self.n)
        out[: self.m, : self.m] = self.S1
        return out

    @property
    def Pi0(self) -> CMat:
        return np.vstack([self.Psi1, self.Psi2])

    @property
    def theta(self) -> tuple[CMat, CMat]:
        """Columns of Pi(0) K as (n x 1) matrices."""
        rotated = self.Pi0 @ EIGENBASIS
        return rotated[:, :1], rotated[:, 1:]

    @classmethod
    def build(
        cls,
        kappa: int,
        A1: Any = None,
        S1: Any = None,
        Psi1: Any = None,
        A2: Any = None,
        Psi2: Any = None,
    ) -> "RadialSeed":
        def as_mat(value: Any, empty: tuple[int, int], cols: int | None = None) -> CMat:
            if value is None:
                return zeros(*empty)
            arr = np.asarray(value, dtype=np.complex128)
            if arr.size == 0:
                return zeros(*empty)
            if cols is not None:
                return arr.reshape(-1, cols)
            return np.atleast_2d(arr)

        return cls(
            kappa=int(kappa),
            A1=as_mat(A1, (0, 0)),
            S1=as_mat(S1, (0, 0)),
            Psi1=as_mat(Psi1, (0, 2), cols=2),
            A2=as_mat(A2, (0, 0)),
            Psi2=as_mat(Psi2, (0, 2), cols=2),
        )

    @classmethod
    def from_payload(cls, data: dict[str, Any]) -> "RadialSeed":
        payload = RadialSeedPayload(**data)
        return cls(
            kappa=payload.kappa,
            A1=_decode(payload.A1, (0, 0)),
            S1=_decode(payload.S1, (0, 0)),
            Psi1=_decode(payload.Psi1, (0, 2)),
            A2=_decode(payload.A2, (0, 0)),
            Psi2=_decode(payload.Psi2, (0, 2)),
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kappa": self.kappa}
        for name in ("A1", "S1", "Psi1", "A2", "Psi2"):
            out[name] = encode_matrix(getattr(self, name)) if getattr(self, name).size else []
        return out


# ---------------------------------------------------------------------------
# Node data along x
# ---------------------------------------------------------------------------


def node_at(a: CMat, s: CMat, pi: CMat) -> SNode:
    """(A, A*, S, Pi, -Pi R); its transfer function is the Darboux matrix w_A."""
    return SNode.new_unchecked(a, adj(a), s, pi, -pi @ ROTATION)


def identity_residual(a: CMat, s: CMat, pi: CMat) -> float:
    """Relative defect of A S - S A* = Pi R Pi*."""
    if a.shape[0] == 0:
        return 0.0
    residual = fnorm(a @ s - s @ adj(a) - pi @ ROTATION @ adj(pi))
    return residual / max(1.0, 2 * fnorm(a) * fnorm(s) + fnorm(pi) ** 2)


def x_matrix(s: CMat, pi: CMat, tol: Tolerances | None = None, positive: bool = True) -> CMat:
    """
    X = Pi* S^{-1} Pi.

    With positive=True, S must be positive definite and is equilibrated by its
    diagonal first; S is strongly graded near x = 0.
    """
    tol = resolve(tol)
    if s.shape[0] == 0:
        return zeros(2, 2)
    if not positive:
        return adj(pi) @ solve_linear(s, pi, tol)
    d = np.real(np.diag(s))
    if np.any(d <= 0):
        raise SingularMatrixError("S(x) is not positive definite")
    scale = 1 / np.sqrt(d)
    s_eq = hermitian_part(s * scale[:, None] * scale[None, :])
    pi_eq = pi * scale[:, None]
    if not is_posdef(s_eq, tol):
        raise SingularMatrixError("S(x) is not positive definite")
    return adj(pi_eq) @ solve_linear(s_eq, pi_eq, tol)


@dataclass(frozen=True)
class RadialSolution:
    """
    Closed-form evaluator of the explicit solution generated by a seed.

    Pi(x) = [e^{ixA} theta1, e^{-ixA} theta2] K* and
    S(x) = diag(S1, 0) + integral_0^x (e^{itA} theta1 theta1* e^{-itA*} + e^{-itA} theta2 theta2* e^{itA*}) dt.
    """
    seed: RadialSeed
    tol: Tolerances | None = None
    A: CMat = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "A", self.seed.A)

    def Pi(self, x: float) -> CMat:
        theta1, theta2 = self.seed.theta
        cols = np.hstack([expm(self.A, 1j * x) @ theta1, expm(self.A, -1j * x) @ theta2])
        return cols @ adj(EIGENBASIS)

    def S(self, x: float) -> CMat:
        theta1, theta2 = self.seed.theta
        return (
            self.seed.S0
            + exp_gramian(1j * self.A, theta1 @ adj(theta1), x)
            + exp_gramian(-1j * self.A, theta2 @ adj(theta2), x)
        )

    def X(self, x: float) -> CMat:
        return x_matrix(self.S(x), self.Pi(x), self.tol)

    def q0(self, x: float) -> CMat:
        return correction(self.X(x))

    def v_star(self, x: float) -> float:
        xm = self.X(x)
        return float(np.real(xm[1, 1] - xm[0, 0]))

    def v_a(self, x: float) -> float:
        return self.v_star(x) - self.seed.kappa / x

    def v_s(self, x: float) -> float:
        xm = self.X(x)
        return float(np.real(xm[0, 1] + xm[1, 0]))

    def upsilon(self, x: float) -> CMat:
        """q0~(x) - (kappa/x) sigma3."""
        return self.q0(x) - self.seed.kappa / x * SIGMA3

    def node(self, x: float) -> SNode:
        return node_at(self.A, self.S(x), self.Pi(x))

    def w(self, x: float, lam: complex) -> CMat:
        return transfer_eval(self.node(x), lam, self.tol)

    def u(self, x: float, lam: complex) -> CMat:
        """w_A(x, lambda) K exp(-i lambda x sigma3)."""
        phase = np.diag([np.exp(-1j * lam * x), np.exp(1j * lam * x)])
        return self.w(x, lam) @ EIGENBASIS @ phase

    def system_matrix(self, x: float, lam: complex) -> CMat:
        """-lambda q1 - q0~(x), the coefficient of u~_x = G~ u~."""
        return -lam * Q1 - self.q0(x)


# ---------------------------------------------------------------------------
# Singular coefficient near zero
# ---------------------------------------------------------------------------


def kappa_fit_samples(xs: NDArray[np.float64], v_star: NDArray[np.float64]) -> float:
    """Intercept of the least-squares line x v_*(x) ~ kappa + c x."""
    design = np.column_stack([np.ones_like(xs), xs])
    coeffs, *_ = np.linalg.lstsq(design, xs * v_star, rcond=None)
    return float(coeffs[0])


def kappa_fit(v_star: Callable[[float], float], x_lo: float = 1e-6, x_hi: float = 1e-3, count: int = 25) -> float:
    """Singular coefficient of v_* fitted on a geometric grid in [x_lo, x_hi]."""
    xs = np.geomspace(x_lo, x_hi, count)
    return kappa_fit_samples(xs, np.array([v_star(float(x)) for x in xs]))


@dataclass(frozen=True)
class UpsilonProfile:
    """Per-decade sup of ||Upsilon|| from x_max down to where S stays invertible."""
    decades: list[tuple[float, float]]
    x_reached: float
    alarm: bool

    @property
    def sup(self) -> float:
        return max((s for _, s in self.decades), default=0.0)


def upsilon_profile(
    solution: RadialSolution,
    x_min: float = 1e-8,
    x_max: float = 1e-2,
    per_decade: int = 4,
    growth: float = 2.0,
) -> UpsilonProfile:
    """
    Boundedness check of Upsilon near zero.

    The alarm is raised when the sup over one decade exceeds `growth` times
    the sup over the decade above it. The descent stops early where S(x) is
    no longer numerically invertible.
    """
    decades: list[tuple[float, float]] = []
    top = x_max
    x_reached = x_max
    while top > x_min * (1 + 1e-9):
        bottom = max(top / 10, x_min)
        try:
            sup = max(fnorm(solution.upsilon(float(x))) for x in np.geomspace(top, bottom, per_decade))
        except SingularMatrixError:
            logger.debug("Upsilon descent stopped at x=%.1e, S(x) not invertible to tolerance", top)
            break
        decades.append((bottom, sup))
        x_reached = bottom
        top = bottom
    alarm = any(lower > growth * max(upper, 1e-300) for (_, upper), (_, lower) in zip(decades, decades[1:]))
    if alarm:
        logger.warning("Upsilon grows towards x=0: %s", [f"{s:.3e}" for _, s in decades])
    return UpsilonProfile(decades=decades, x_reached=x_reached, alarm=alarm)


# ---------------------------------------------------------------------------
# Explicit construction
# ---------------------------------------------------------------------------


def radial_construct(seed: RadialSeed, grid: GridSpec, tol: Tolerances | None = None) -> SolutionGrid:
    """
    q0~ over a 1-D grid in (0, x1] with components v_a~, v_s~ and Upsilon.

    Raises:
        SingularMatrixError: S(x) is not positive at a sample
    """
    tol = resolve(tol)
    if grid.is_2d or grid.x0 <= 0:
        raise SeedValidationError("Radial solutions need a 1-D grid inside x > 0")
    solution = RadialSolution(seed, tol)
    xs = grid.xs

    def sample(x: float) -> tuple[CMat, float]:
        s, pi = solution.S(x), solution.Pi(x)
        try:
            xm = x_matrix(s, pi, tol)
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"S(x) is not positive at x={x:.6g}") from exc
        return correction(xm), identity_residual(solution.A, s, pi)

    samples = grid_map(sample, [float(x) for x in xs])
    values = np.stack([q for q, _ in samples]) if samples else np.empty((0, 2, 2), dtype=np.complex128)
    kappa_term = seed.kappa / xs
    v_a = np.real(values[:, 0, 0]) - kappa_term
    v_s = v_s_of(values)
    upsilon = values - kappa_term[:, None, None] * SIGMA3
    components = {"v_a": v_a, "v_s": v_s}
    for i in range(2):
        for j in range(2):
            components[f"re_upsilon_{i + 1}{j + 1}"] = np.real(upsilon[:, i, j])
            components[f"im_upsilon_{i + 1}{j + 1}"] = np.imag(upsilon[:, i, j])

    metadata: dict[str, Any] = {
        "kappa": seed.kappa,
        "identity_residual": max((r for _, r in samples), default=0.0),
    }
    if seed.varkappa:
        profile = upsilon_profile(solution)
        try:
            fitted: float | None = kappa_fit(solution.v_star)
        except SingularMatrixError:
            logger.warning("S(x) not invertible on the kappa fit window; fit skipped")
            fitted = None
        metadata.update(
            kappa_fit=fitted,
            upsilon_sup=profile.sup,
            upsilon_x_min=profile.x_reached,
            upsilon_alarm=profile.alarm,
        )
    return SolutionGrid(system="radial", grid=grid, values=values, components=components, metadata=metadata)


def radial_fundamental(seed: RadialSeed, x: float, lam: complex, tol: Tolerances | None = None) -> CMat:
    """u~(x, lambda) = w_A(x, lambda) K exp(-i lambda x sigma3)."""
    if x <= 0:
        raise SeedValidationError("The radial fundamental solution is defined for x > 0")
    return RadialSolution(seed, tol).u(x, lam)


# ---------------------------------------------------------------------------
# Single transformation of a given coefficient
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialStep:
    """Samples of one transformation along the grid."""
    xs: NDArray[np.float64]
    A: CMat
    S: NDArray[np.complex128]
    Pi: NDArray[np.complex128]
    q0: NDArray[np.complex128]
    q0_new: NDArray[np.complex128]
    tol: Tolerances | None = None

    @property
    def delta_v_star(self) -> NDArray[np.float64]:
        return np.real(self.q0_new[:, 0, 0] - self.q0[:, 0, 0])

    @property
    def delta_v_s(self) -> NDArray[np.float64]:
        return v_s_of(self.q0_new) - v_s_of(self.q0)

    @property
    def delta_v_e(self) -> NDArray[np.float64]:
        return v_e_of(self.q0_new) - v_e_of(self.q0)

    def node(self, i: int) -> SNode:
        return node_at(self.A, self.S[i], self.Pi[i])

    def w(self, i: int, lam: complex) -> CMat:
        return transfer_eval(self.node(i), lam, self.tol)

    def identity_residuals(self) -> NDArray[np.float64]:
        return np.array([identity_residual(self.A, s, p) for s, p in zip(self.S, self.Pi)])

    def darboux_residual(self, lam: complex) -> tuple[float, int]:
        """max over interior samples of ||D_h w_A - (G~ w_A - w_A G)|| and its index."""
        if len(self.xs) < 5:
            raise SeedValidationError("Residuals need at least 5 grid points")
        h = self.xs[1] - self.xs[0]
        ws = np.stack([self.w(i, lam) for i in range(len(self.xs))])
        g = -lam * Q1 - self.q0
        g_new = -lam * Q1 - self.q0_new
        dw = (ws[2:] - ws[:-2]) / (2 * h)
        r = dw - (g_new[1:-1] @ ws[1:-1] - ws[1:-1] @ g[1:-1])
        norms = np.linalg.norm(r, axis=(1, 2))
        i = int(np.argmax(norms))
        return float(norms[i]), i + 1


def radial_gbdt_step(
    q0: CoefficientSampler,
    A: CMat,
    S0: CMat,
    Pi0: CMat,
    grid: GridSpec,
    x0: float | None = None,
    method: str = ADAPTIVE,
    tol: Tolerances | None = None,
) -> RadialStep:
    """
    Transform q0 with the node fixed by A, S(x0), Pi(x0).

    Pi and S are integrated from x0 (the left end of the grid by default)
    with the selected integrator. Only invertibility of S is required along the grid.

    Raises:
        SeedValidationError: A S - S A* = Pi R Pi* fails at x0
        SingularMatrixError: S is singular at a grid point
    """
    tol = resolve(tol)
    n = require_square(A, "A")
    if S0.shape != (n, n) or Pi0.shape != (n, 2):
        raise SeedValidationError(f"S(x0) must be {n}x{n} and Pi(x0) {n}x2")
    if grid.is_2d:
        raise SeedValidationError("The radial step runs on a 1-D grid")
    residual = identity_residual(A, S0, Pi0)
    if residual > tol.seed_identity_rtol:
        raise SeedValidationError(f"A S - S A* = Pi R Pi* violated at x0 (relative residual {residual:.3e})")

    def rhs(x: float, state: list[CMat]) -> list[CMat]:
        pi, _ = state
        return [A @ pi @ Q1 + pi @ q0(x), pi @ adj(pi)]

    xs = grid.xs
    start = xs[0] if x0 is None else x0
    init = [Pi0, S0]
    if start != xs[0]:
        carried = integrate_matrix_ode(rhs, init, [start, xs[0]], method=method, tol=tol)
        init = [carried[0][-1], carried[1][-1]]
    pis, ss = integrate_matrix_ode(rhs, init, xs, method=method, tol=tol)
    q0s = np.stack([q0(float(x)) for x in xs])
    new = np.empty_like(q0s)
    for i, x in enumerate(xs):
        try:
            new[i] = q0s[i] + correction(x_matrix(ss[i], pis[i], tol, positive=False))
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"S is singular at x={x:.6g}") from exc
    step = RadialStep(xs=xs, A=A, S=ss, Pi=pis, q0=q0s, q0_new=new, tol=tol)
    logger.debug("Radial step of order %d, identity residual %.2e", n, float(np.max(step.identity_residuals(), initial=0.0)))
    return step


# ---------------------------------------------------------------------------
# One-dimensional node on the trivial background
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarRemoval:
    """
    n = 1, q0 = 0, S(0) = 0 and Pi(0) K = [1, alpha] with |alpha| = 1.

    Closed forms for Pi, S and v_*~; the new singular coefficient is
    -(alpha + conj alpha) / (1 + |alpha|^2).
    """
    a: complex
    alpha: complex

    def __post_init__(self) -> None:
        if not math.isclose(abs(self.alpha), 1.0, rel_tol=0.0, abs_tol=1e-12):
            raise SeedValidationError("|alpha| = 1 is required for A S - S A* = Pi R Pi* at x = 0")

    @property
    def A(self) -> CMat:
        return np.array([[self.a]], dtype=np.complex128)

    @property
    def real(self) -> bool:
        return abs(self.a.imag) <= 1e-14 * max(1.0, abs(self.a))

    @property
    def kappa(self) -> float:
        return float(-(self.alpha + np.conj(self.alpha)).real / (1 + abs(self.alpha) ** 2))

    def Pi(self, x: float) -> CMat:
        row = np.array([[np.exp(1j * x * self.a), self.alpha * np.exp(-1j * x * self.a)]])
        return row @ adj(EIGENBASIS)

    def S(self, x: float) -> CMat:
        if self.real:
            return np.array([[(1 + abs(self.alpha) ** 2) * x]], dtype=np.complex128)
        d = self.a - np.conj(self.a)
        value = 1j / d * (np.exp(1j * x * (np.conj(self.a) - self.a)) - np.exp(1j * x * d))
        return np.array([[value]], dtype=np.complex128)

    def v_star(self, x: float) -> float:
        num = self.alpha * np.exp(-1j * x * (self.a + np.conj(self.a))) + np.conj(self.alpha) * np.exp(
            1j * x * (self.a + np.conj(self.a))
        )
        if self.real:
            return float(np.real(-num / ((1 + abs(self.alpha) ** 2) * x)))
        d = self.a - np.conj(self.a)
        den = np.exp(1j * x * (np.conj(self.a) - self.a)) - np.exp(1j * x * d)
        return float(np.real(1j * d * num / den))

    def step(self, grid: GridSpec, tol: Tolerances | None = None) -> RadialStep:
        """The same transformation through the generic step started at the grid's left end."""
        x0 = grid.x0
        return radial_gbdt_step(lambda x: zeros(2, 2), self.A, self.S(x0), self.Pi(x0), grid, tol=tol)


# ---------------------------------------------------------------------------
# Superposition
# ---------------------------------------------------------------------------


def superposition_defect(
    solution: RadialSolution,
    xs: Sequence[float],
    n1: int | None = None,
    tol: Tolerances | None = None,
) -> float:
    """
    Largest gap between the one-shot q0~ and two successive transformations.

    The node is split at n1 (the size of the regular block by default) into
    w_A = w_2 w_1; the first step uses (A11, S11, Pi1), the second the Schur
    complement node, and their corrections add up.
    """
    tol = resolve(tol)
    split = solution.seed.m if n1 is None else n1
    if not 0 < split < solution.seed.n:
        raise SeedValidationError(f"Split n1={split} must lie strictly inside 1..{solution.seed.n}")
    worst = 0.0
    for x in xs:
        node = solution.node(float(x))
        first, second = factorize(node, split, tol)
        once = correction(x_matrix(node.S, node.Pi1, tol))
        stepwise = correction(x_matrix(first.S, first.Pi1, tol, positive=False))
        stepwise = stepwise + correction(x_matrix(second.S, second.Pi1, tol, positive=False))
        worst = max(worst, fnorm(once - stepwise) / max(1.0, fnorm(once)))
    return worst
