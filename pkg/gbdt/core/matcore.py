"""
Matrix Core

Dense complex linear algebra shared by every other module: exponentials,
guarded linear and Sylvester solves, the inverse-problem Riccati solver,
positivity gates, Gramian integrals and the integrators for matrix-valued
ODE systems (classical RK4 and scipy solve_ivp).
"""

import itertools
import logging
import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from gbdt._compat import StrEnum
from typing import TypeVar

import numpy as np
import scipy.linalg as sla
from numpy.typing import NDArray
from scipy.integrate import solve_ivp

from ..config import Tolerances, resolve, settings
from ..errors import (
    ConvergenceError,
    NonFiniteError,
    RiccatiError,
    SeedValidationError,
    SingularMatrixError,
    SpectralOverlapError,
)
from ..models import GridSpec

logger = logging.getLogger(__name__)

CMat = NDArray[np.complex128]

T = TypeVar("T")
R = TypeVar("R")


# ---------------------------------------------------------------------------
# Construction helpers
# ---------------------------------------------------------------------------


def cmat(data: object) -> CMat:
    """Coerce to a finite 2-D complex128 array."""
    m = np.asarray(data, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise SeedValidationError(f"Expected a matrix, got array of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("Matrix has non-finite entries")
    return m


def eye(n: int) -> CMat:
    return np.eye(n, dtype=np.complex128)


def zeros(rows: int, cols: int) -> CMat:
    return np.zeros((rows, cols), dtype=np.complex128)


def adj(m: CMat) -> CMat:
    """Conjugate transpose."""
    return m.conj().T


def fnorm(m: CMat) -> float:
    """Frobenius norm, 0 for empty matrices."""
    return float(np.linalg.norm(m)) if m.size else 0.0


def require_square(m: CMat, name: str = "matrix") -> int:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SeedValidationError(f"{name} must be square, got shape {m.shape}")
    return m.shape[0]


def blocks(top: Sequence[CMat], bottom: Sequence[CMat]) -> CMat:
    return np.block([list(top), list(bottom)])


# ---------------------------------------------------------------------------
# Exponential and solves
# ---------------------------------------------------------------------------


def expm(m: CMat, t: complex = 1.0) -> CMat:
    """exp(tM); the identity for t = 0. Complex t is allowed."""
    n = require_square(m, "M")
    if t == 0 or n == 0:
        return eye(n)
    return sla.expm(t * m)


def condition(m: CMat) -> float:
    if m.size == 0:
        return 1.0
    return float(np.linalg.cond(m))


def solve_linear(m: CMat, rhs: CMat, tol: Tolerances | None = None) -> CMat:
    """Solve MX = RHS, refusing matrices whose condition estimate exceeds the cap."""
    tol = resolve(tol)
    n = require_square(m, "M")
    if rhs.shape[0] != n:
        raise SeedValidationError(f"RHS has {rhs.shape[0]} rows, expected {n}")
    if n == 0:
        return np.zeros(rhs.shape, dtype=np.complex128)
    cond = condition(m)
    if not np.isfinite(cond) or cond > tol.cond_cap:
        raise SingularMatrixError(f"Matrix is singular to tolerance (condition {cond:.3e})")
    return sla.solve(m, rhs)


def inv(m: CMat, tol: Tolerances | None = None) -> CMat:
    return solve_linear(m, eye(m.shape[0]), tol)


def spectral_separation(a: CMat, b: CMat) -> float:
    """min |alpha - beta| over alpha in sigma(A), beta in sigma(B)."""
    if a.size == 0 or b.size == 0:
        return math.inf
    ea = np.linalg.eigvals(a)
    eb = np.linalg.eigvals(b)
    return float(np.min(np.abs(ea[:, None] - eb[None, :])))


def solve_sylvester(a: CMat, b: CMat, c: CMat, tol: Tolerances | None = None) -> CMat:
    """
    Solve AX - XB = C by Schur-form back-substitution.

    Raises:
        SpectralOverlapError: sigma(A) and sigma(B) are not separated, so the
            solution is not unique
    """
    tol = resolve(tol)
    require_square(a, "A")
    require_square(b, "B")
    if c.shape != (a.shape[0], b.shape[0]):
        raise SeedValidationError(f"C has shape {c.shape}, expected {(a.shape[0], b.shape[0])}")
    if c.size == 0:
        return np.zeros(c.shape, dtype=np.complex128)
    scale = max(1.0, fnorm(a) + fnorm(b))
    gap = spectral_separation(a, b)
    if gap < tol.spectral_gap * scale:
        raise SpectralOverlapError(f"Spectra not separated (gap {gap:.3e})")
    return sla.solve_sylvester(a, -b, c)


# ---------------------------------------------------------------------------
# Hermitian structure
# ---------------------------------------------------------------------------


def is_hermitian(s: CMat, tol: Tolerances | None = None) -> bool:
    tol = resolve(tol)
    if s.size == 0:
        return True
    return fnorm(s - adj(s)) <= tol.hermitian_rtol * max(fnorm(s), 1e-300)


def hermitian_part(s: CMat) -> CMat:
    return (s + adj(s)) / 2


def is_posdef(s: CMat, tol: Tolerances | None = None) -> bool:
    """
    Positivity gate: smallest eigenvalue above -rtol*||S|| and S invertible.

    Raises:
        SeedValidationError: S is not Hermitian to tolerance
    """
    tol = resolve(tol)
    require_square(s, "S")
    if s.shape[0] == 0:
        return True
    if not is_hermitian(s, tol):
        raise SeedValidationError("is_posdef requires a Hermitian matrix")
    w = np.linalg.eigvalsh(hermitian_part(s))
    norm = float(np.max(np.abs(w)))
    if norm == 0.0:
        return False
    if w[0] <= -tol.posdef_rtol * norm:
        return False
    return bool(w[0] > norm / tol.cond_cap)


def hermitian_sqrt(x: CMat, inverse: bool = False) -> CMat:
    """Positive square root X^{1/2} (or X^{-1/2}) of a positive Hermitian matrix."""
    if x.size == 0:
        return x.copy()
    w, v = np.linalg.eigh(hermitian_part(x))
    if w[0] <= 0:
        raise SingularMatrixError("Square root requires a positive definite matrix")
    d = w ** (-0.5 if inverse else 0.5)
    return (v * d) @ adj(v)


# ---------------------------------------------------------------------------
# Krylov rank
# ---------------------------------------------------------------------------


def numerical_rank(m: CMat, tol: Tolerances | None = None) -> int:
    tol = resolve(tol)
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > tol.rank_rtol * sv[0]))


def krylov_matrix(a: CMat, b: CMat) -> CMat:
    """[B, AB, ..., A^{n-1}B]."""
    n = a.shape[0]
    cols = [b]
    for _ in range(1, n):
        cols.append(a @ cols[-1])
    return np.hstack(cols) if cols else zeros(n, 0)


def krylov_rank(a: CMat, b: CMat, tol: Tolerances | None = None) -> int:
    return numerical_rank(krylov_matrix(a, b), tol)


# ---------------------------------------------------------------------------
# Riccati equations of the inverse problems
# ---------------------------------------------------------------------------


class RiccatiForm(StrEnum):
    """The three Riccati equations solved by the inverse problems."""

    SA_DIRAC = "sa_dirac"  # XC*CX - i(AX - XA*) + BB* = 0, X > 0
    GPE = "gpe"  # i(XA - A*X) = C*C + XBB*X, Im sigma(A + iBB*X) <= 0
    SKEW = "skew"  # XC*CX + i(AX - XA*) - BB* = 0, X > 0


def _riccati_terms(form: RiccatiForm, a: CMat, b: CMat, c: CMat) -> tuple[CMat, CMat, CMat]:
    """Reduce each form to X G X + X F + F* X + Q = 0 and return (F, G, Q)."""
    if form is RiccatiForm.SA_DIRAC:
        return 1j * adj(a), adj(c) @ c, b @ adj(b)
    if form is RiccatiForm.SKEW:
        return -1j * adj(a), adj(c) @ c, -(b @ adj(b))
    return -1j * a, b @ adj(b), adj(c) @ c


def riccati_residual(form: RiccatiForm, a: CMat, b: CMat, c: CMat, x: CMat) -> float:
    """Frobenius residual of the selected equation as printed."""
    f, g, q = _riccati_terms(form, a, b, c)
    return fnorm(x @ g @ x + x @ f + adj(f) @ x + q)


def _admissible(form: RiccatiForm, x: CMat, lam: CMat, tol: Tolerances) -> bool:
    if form is RiccatiForm.GPE:
        if condition(x) > tol.cond_cap:
            return False
        scale = max(1.0, fnorm(lam))
        return bool(np.max(np.linalg.eigvals(lam).real) <= 1e-9 * scale)
    return is_posdef(x, tol)


def _newton_refine(x: CMat, f: CMat, g: CMat, q: CMat, tol: Tolerances) -> CMat:
    """Newton steps on the Riccati map; each step solves a Lyapunov-type equation."""
    for _ in range(tol.riccati_newton_steps):
        res = x @ g @ x + x @ f + adj(f) @ x + q
        if fnorm(res) <= 1e-15 * max(1.0, fnorm(x) ** 2 * fnorm(g) + fnorm(q)):
            break
        lam = f + g @ x
        try:
            dx = solve_sylvester(adj(lam), -lam, -res, tol)
        except SpectralOverlapError:
            logger.debug("Newton refinement skipped: closed-loop spectrum not separated")
            break
        x = hermitian_part(x + dx)
    return x


def _candidate_subspaces(w: NDArray[np.complex128], n: int, cap: int) -> Iterable[tuple[int, ...]]:
    total = math.comb(2 * n, n)
    if total <= cap:
        yield from itertools.combinations(range(2 * n), n)
        return
    logger.debug("Riccati: %d subspaces exceed cap %d, using half-plane selections", total, cap)
    order = np.argsort(w.real)
    yield tuple(sorted(order[:n].tolist()))
    yield tuple(sorted(order[n:].tolist()))


def solve_inverse_riccati(
    form: RiccatiForm,
    a: CMat,
    b: CMat,
    c: CMat,
    tol: Tolerances | None = None,
) -> CMat:
    """
    Solve the Riccati equation of an inverse problem.

    Invariant subspaces of the Hamiltonian-type matrix [[F, G], [-Q, -F*]]
    supply candidates X = U2 U1^{-1}; candidates are Newton-refined and
    filtered by the side condition of the form, and the admissible one with
    the smallest residual is returned.

    Raises:
        RiccatiError: (A, B, C) is not minimal or no candidate is admissible
    """
    tol = resolve(tol)
    form = RiccatiForm(form)
    n = require_square(a, "A")
    if n == 0:
        return zeros(0, 0)
    if krylov_rank(a, b, tol) < n or krylov_rank(adj(a), adj(c), tol) < n:
        raise RiccatiError("No admissible solution: realization is not minimal")

    f, g, q = _riccati_terms(form, a, b, c)
    h = blocks([f, g], [-q, -adj(f)])
    w, v = sla.eig(h)
    scale = max(1.0, fnorm(f) + fnorm(g) + fnorm(q))

    best: tuple[float, CMat] | None = None
    for idx in _candidate_subspaces(w, n, tol.riccati_max_candidates):
        u = v[:, list(idx)]
        u1, u2 = u[:n], u[n:]
        if condition(u1) > tol.cond_cap:
            continue
        x = u2 @ inv(u1, tol)
        if fnorm(x - adj(x)) > 1e-6 * max(1.0, fnorm(x)):
            continue
        x = _newton_refine(hermitian_part(x), f, g, q, tol)
        res = riccati_residual(form, a, b, c, x)
        if res > tol.riccati_residual * scale * max(1.0, fnorm(x)) ** 2:
            continue
        if not _admissible(form, x, f + g @ x, tol):
            continue
        if best is None or res < best[0]:
            best = (res, x)

    if best is None:
        raise RiccatiError(f"No admissible solution of the {form.value} Riccati equation")
    logger.debug("Riccati %s solved, residual %.3e", form.value, best[0])
    return best[1]


# ---------------------------------------------------------------------------
# Gramian integral
# ---------------------------------------------------------------------------


def exp_gramian(m: CMat, c: CMat, x: float) -> CMat:
    """
    I(x) = integral_0^x e^{tM} C e^{tM*} dt.

    Power series in x near the origin, Van Loan block exponential otherwise.
    """
    n = require_square(m, "M")
    if n == 0 or x == 0:
        return zeros(n, n)
    if abs(x) * max(fnorm(m), 1e-300) <= 0.5:
        term = c.copy()
        total = x * term
        coeff = x
        for k in range(1, 60):
            term = m @ term + term @ adj(m)
            coeff *= x / (k + 1)
            inc = coeff * term
            total = total + inc
            if fnorm(inc) <= 1e-17 * fnorm(total):
                break
        return total
    big = blocks([-m, c], [zeros(n, n), adj(m)])
    e = sla.expm(x * big)
    return expm(m, x) @ e[:n, n:]


# ---------------------------------------------------------------------------
# ODE integration
# ---------------------------------------------------------------------------

OdeRhs = Callable[[float, list[CMat]], list[CMat]]

# Classical fixed-step Runge-Kutta; any other name is a scipy solve_ivp method
RK4 = "RK4"
ADAPTIVE = "DOP853"


def _rk4_step(rhs: OdeRhs, x: float, state: list[CMat], h: float) -> list[CMat]:
    k1 = rhs(x, state)
    k2 = rhs(x + h / 2, [s + h / 2 * k for s, k in zip(state, k1)])
    k3 = rhs(x + h / 2, [s + h / 2 * k for s, k in zip(state, k2)])
    k4 = rhs(x + h, [s + h * k for s, k in zip(state, k3)])
    out = [s + h / 6 * (a + 2 * b + 2 * c + d) for s, a, b, c, d in zip(state, k1, k2, k3, k4)]
    for arr in out:
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError(f"Non-finite derivative encountered near x={x}")
    return out


def _integrate_fixed(
    rhs: OdeRhs,
    state: list[CMat],
    xs: NDArray[np.float64],
    substeps: int,
    max_step: float | None,
) -> list[NDArray[np.complex128]]:
    traj = [[s.copy()] for s in state]
    for x_a, x_b in zip(xs[:-1], xs[1:]):
        k = substeps
        if max_step is not None:
            k = max(k, math.ceil(abs(x_b - x_a) / max_step))
        h = (x_b - x_a) / k
        x = float(x_a)
        for _ in range(k):
            state = _rk4_step(rhs, x, state, h)
            x += h
        for t, s in zip(traj, state):
            t.append(s.copy())
    return [np.stack(t) for t in traj]


def _integrate_adaptive(
    rhs: OdeRhs,
    state: list[CMat],
    xs: NDArray[np.float64],
    method: str,
    max_step: float | None,
    tol: Tolerances,
) -> list[NDArray[np.complex128]]:
    shapes = [s.shape for s in state]
    bounds = np.cumsum([0] + [s.size for s in state])

    def unpack(y: NDArray[np.complex128]) -> list[CMat]:
        return [y[a:b].reshape(shape) for a, b, shape in zip(bounds[:-1], bounds[1:], shapes)]

    def fun(x: float, y: NDArray[np.complex128]) -> NDArray[np.complex128]:
        dy = np.concatenate([np.asarray(d, dtype=np.complex128).ravel() for d in rhs(x, unpack(y))])
        if not np.all(np.isfinite(dy)):
            raise NonFiniteError(f"Non-finite derivative encountered near x={x}")
        return dy

    keep = np.r_[True, np.diff(xs) != 0]
    points = xs[keep]
    index = np.cumsum(keep) - 1
    steps = np.diff(points)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise SeedValidationError("Integration abscissae must be monotone")
    y0 = np.concatenate([s.ravel() for s in state])
    if len(points) == 1 or y0.size == 0:
        return [np.stack([s.copy()] * len(xs)) for s in state]
    sol = solve_ivp(
        fun,
        (float(points[0]), float(points[-1])),
        y0,
        method=method,
        t_eval=points,
        rtol=tol.ode_rtol,
        atol=tol.ode_atol,
        max_step=np.inf if max_step is None else max_step,
    )
    if not sol.success:
        raise ConvergenceError(f"ODE integration failed: {sol.message}")
    ys = sol.y.T[index]
    return [ys[:, a:b].reshape(len(xs), *shape) for a, b, shape in zip(bounds[:-1], bounds[1:], shapes)]


def integrate_matrix_ode(
    rhs: OdeRhs,
    init: Sequence[CMat],
    grid: GridSpec | Sequence[float] | NDArray[np.float64],
    substeps: int = 1,
    max_step: float | None = None,
    method: str = RK4,
    tol: Tolerances | None = None,
) -> list[NDArray[np.complex128]]:
    """
    Integrate a system of matrix ODEs through the grid abscissae.

    With method RK4 each interval is split into `substeps` classical
    Runge-Kutta steps (or enough to keep steps below `max_step`). Any other
    method name is handed to scipy's solve_ivp with the ode_rtol/ode_atol
    tolerances and the grid as evaluation points. Returns one array per
    state component with the sample index as leading axis.

    Raises:
        NonFiniteError: the right-hand side produced NaN or Inf
        ConvergenceError: the adaptive solver gave up
    """
    tol = resolve(tol)
    xs = grid.xs if isinstance(grid, GridSpec) else np.asarray(grid, dtype=np.float64)
    state = [np.array(s, dtype=np.complex128) for s in init]
    if method == RK4:
        return _integrate_fixed(rhs, state, xs, substeps, max_step)
    return _integrate_adaptive(rhs, state, xs, method, max_step, tol)


# ---------------------------------------------------------------------------
# Grid parallelism
# ---------------------------------------------------------------------------


def grid_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Order-preserving map, threaded up to the GBDT_THREADS cap."""
    items = list(items)
    if settings.threads <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        return list(pool.map(fn, items))
