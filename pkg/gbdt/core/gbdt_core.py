"""
GBDT Engine

Generalized Bäcklund-Darboux transformation for first-order systems

    y_x = G(x, lambda) y,
    G = -( sum_k lambda^k q_k(x) + sum_s sum_k (lambda - c_s)^{-k} q_sk(x) ).

Given a node (A1, A2, S(0), Pi1(0), Pi2(0)) the engine integrates the
generalized eigenfunctions Pi1, Pi2 and the matrix S along x (and along t for
two-variable problems), produces the transformed coefficients and checks the
Darboux property of w_A(x, lambda).
"""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from ..config import Tolerances, resolve
from ..errors import SeedValidationError, SpectralOverlapError
from ..models import GridSpec
from .matcore import (
    ADAPTIVE,
    CMat,
    adj,
    eye,
    fnorm,
    integrate_matrix_ode,
    inv,
    solve_linear,
    spectral_separation,
)
from .snode import SNode, identity_scale, transfer_eval, verify_identity

logger = logging.getLogger(__name__)

Coefficient = Callable[[float, float], CMat]


def const(m: CMat) -> Coefficient:
    """Constant coefficient."""
    m = np.asarray(m, dtype=np.complex128)
    return lambda x, t=0.0: m


def interpolated(xs: Sequence[float], samples: NDArray[np.complex128]) -> Coefficient:
    """Coefficient sampled on xs, linearly interpolated in x."""
    xs = np.asarray(xs, dtype=np.float64)
    samples = np.asarray(samples, dtype=np.complex128)
    flat = samples.reshape(len(xs), -1)
    shape = samples.shape[1:]

    def coeff(x: float, t: float = 0.0) -> CMat:
        re = [np.interp(x, xs, flat[:, k].real) for k in range(flat.shape[1])]
        im = [np.interp(x, xs, flat[:, k].imag) for k in range(flat.shape[1])]
        return (np.array(re) + 1j * np.array(im)).reshape(shape)

    return coeff


@dataclass(frozen=True)
class RationalCoeffs:
    """
    Coefficients of a system rational in lambda.

    poly[k] multiplies lambda^k (k = 0..r); poles[s] = (c_s, [q_s1, ..., q_s r_s])
    where q_sk multiplies (lambda - c_s)^{-k}. Missing powers are None.
    """
    poly: tuple[Coefficient | None, ...] = ()
    poles: tuple[tuple[complex, tuple[Coefficient | None, ...]], ...] = ()

    def __post_init__(self) -> None:
        cs = [complex(c) for c, _ in self.poles]
        for i in range(len(cs)):
            for j in range(i + 1, len(cs)):
                if cs[i] == cs[j]:
                    raise SeedValidationError(f"Poles must be distinct, got {cs[i]} twice")

    @property
    def r(self) -> int:
        return len(self.poly) - 1

    def poly_at(self, x: float, t: float, m: int) -> list[CMat]:
        return [np.zeros((m, m), complex) if q is None else q(x, t) for q in self.poly]

    def poles_at(self, x: float, t: float, m: int) -> list[list[CMat]]:
        return [[np.zeros((m, m), complex) if q is None else q(x, t) for q in qs] for _, qs in self.poles]

    def G(self, x: float, lam: complex, t: float = 0.0, m: int | None = None) -> CMat:
        """Coefficient matrix of the system at (x, t, lambda)."""
        m = m or self._width(x, t)
        total = np.zeros((m, m), dtype=np.complex128)
        for k, q in enumerate(self.poly_at(x, t, m)):
            total += lam**k * q
        for (c, _), qs in zip(self.poles, self.poles_at(x, t, m)):
            for k, q in enumerate(qs, start=1):
                total += (lam - c) ** (-k) * q
        return -total

    def _width(self, x: float, t: float) -> int:
        for q in self.poly:
            if q is not None:
                return q(x, t).shape[0]
        for _, qs in self.poles:
            for q in qs:
                if q is not None:
                    return q(x, t).shape[0]
        raise SeedValidationError("All coefficients are missing; pass m explicitly")


@dataclass(frozen=True)
class CoeffSample:
    """Transformed coefficients at one point."""
    poly: list[CMat]
    poles: list[list[CMat]]

    def G(self, lam: complex, pole_points: Sequence[complex]) -> CMat:
        m = (self.poly or self.poles[0])[0].shape[0]
        total = np.zeros((m, m), dtype=np.complex128)
        for k, q in enumerate(self.poly):
            total += lam**k * q
        for c, qs in zip(pole_points, self.poles):
            for k, q in enumerate(qs, start=1):
                total += (lam - c) ** (-k) * q
        return -total


class _Powers:
    """Signed powers of (A - cI), computed once."""

    def __init__(self, a: CMat, c: complex = 0.0, tol: Tolerances | None = None):
        n = a.shape[0]
        self.base = a - c * eye(n)
        self.tol = tol
        self._cache: dict[int, CMat] = {0: eye(n), 1: self.base}

    def __getitem__(self, k: int) -> CMat:
        if k not in self._cache:
            if k == -1:
                self._cache[k] = inv(self.base, self.tol)
            elif k < 0:
                self._cache[k] = self[k + 1] @ self[-1]
            else:
                self._cache[k] = self[k - 1] @ self.base
        return self._cache[k]


@dataclass
class _Engine:
    coeffs: RationalCoeffs
    A1: CMat
    A2: CMat
    tol: Tolerances
    p1: _Powers = field(init=False)
    p2: _Powers = field(init=False)
    pole_p1: list[_Powers] = field(init=False)
    pole_p2: list[_Powers] = field(init=False)

    def __post_init__(self) -> None:
        self.p1 = _Powers(self.A1, 0.0, self.tol)
        self.p2 = _Powers(self.A2, 0.0, self.tol)
        scale = max(1.0, fnorm(self.A1) + fnorm(self.A2))
        for c, _ in self.coeffs.poles:
            point = np.array([[c]], dtype=np.complex128)
            if min(spectral_separation(self.A1, point), spectral_separation(self.A2, point)) < self.tol.spectral_gap * scale:
                raise SpectralOverlapError(f"Pole c={c} collides with the node spectrum")
        self.pole_p1 = [_Powers(self.A1, c, self.tol) for c, _ in self.coeffs.poles]
        self.pole_p2 = [_Powers(self.A2, c, self.tol) for c, _ in self.coeffs.poles]

    def rhs(self, x: float, t: float, state: list[CMat]) -> list[CMat]:
        """Derivatives of (S, Pi1, Pi2) at one point."""
        s, pi1, pi2 = state
        m = pi1.shape[1]
        pi2h = adj(pi2)
        d_pi1 = np.zeros_like(pi1)
        d_pi2h = np.zeros_like(pi2h)
        d_s = np.zeros_like(s)
        for k, q in enumerate(self.coeffs.poly_at(x, t, m)):
            d_pi1 += self.p1[k] @ pi1 @ q
            d_pi2h -= q @ pi2h @ self.p2[k]
            for j in range(1, k + 1):
                d_s += self.p1[k - j] @ pi1 @ q @ pi2h @ self.p2[j - 1]
        for b1, b2, qs in zip(self.pole_p1, self.pole_p2, self.coeffs.poles_at(x, t, m)):
            for k, q in enumerate(qs, start=1):
                d_pi1 += b1[-k] @ pi1 @ q
                d_pi2h -= q @ pi2h @ b2[-k]
                for j in range(1, k + 1):
                    d_s -= b1[j - k - 1] @ pi1 @ q @ pi2h @ b2[-j]
        return [d_s, d_pi1, adj(d_pi2h)]


@dataclass(frozen=True)
class GbdtState:
    """Node sampled along x: fixed A1, A2 and trajectories S(x), Pi1(x), Pi2(x)."""
    A1: CMat
    A2: CMat
    xs: NDArray[np.float64]
    S: NDArray[np.complex128]
    Pi1: NDArray[np.complex128]
    Pi2: NDArray[np.complex128]
    t: float = 0.0

    def node(self, i: int) -> SNode:
        return SNode.new_unchecked(self.A1, self.A2, self.S[i], self.Pi1[i], self.Pi2[i])

    def index_of(self, x: float) -> int:
        i = int(np.argmin(np.abs(self.xs - x)))
        if abs(self.xs[i] - x) > 1e-9 * max(1.0, abs(x)):
            raise SeedValidationError(f"x={x} is not a grid point")
        return i

    def identity_residuals(self) -> NDArray[np.float64]:
        """Relative residual of A1 S - S A2 = Pi1 Pi2* at every sample."""
        return np.array([verify_identity(self.node(i)) / identity_scale(self.node(i)) for i in range(len(self.xs))])


@dataclass(frozen=True)
class GbdtPlane:
    """Node sampled over an (x, t) grid; arrays are indexed [t, x, ...]."""
    A1: CMat
    A2: CMat
    xs: NDArray[np.float64]
    ts: NDArray[np.float64]
    S: NDArray[np.complex128]
    Pi1: NDArray[np.complex128]
    Pi2: NDArray[np.complex128]

    def node(self, it: int, ix: int) -> SNode:
        return SNode.new_unchecked(self.A1, self.A2, self.S[it, ix], self.Pi1[it, ix], self.Pi2[it, ix])

    def slice(self, it: int) -> GbdtState:
        return GbdtState(self.A1, self.A2, self.xs, self.S[it], self.Pi1[it], self.Pi2[it], float(self.ts[it]))

    def identity_residuals(self) -> NDArray[np.float64]:
        out = np.empty((len(self.ts), len(self.xs)))
        for it in range(len(self.ts)):
            for ix in range(len(self.xs)):
                node = self.node(it, ix)
                out[it, ix] = verify_identity(node) / identity_scale(node)
        return out


def _check_initial(A1: CMat, A2: CMat, S0: CMat, Pi1_0: CMat, Pi2_0: CMat, tol: Tolerances) -> None:
    node = SNode.new_unchecked(A1, A2, S0, Pi1_0, Pi2_0)
    residual = verify_identity(node)
    if residual > tol.seed_identity_rtol * identity_scale(node):
        raise SeedValidationError(f"Initial identity A1 S - S A2 = Pi1 Pi2* violated (residual {residual:.3e})")


def evolve(
    coeffs: RationalCoeffs,
    A1: CMat,
    A2: CMat,
    S0: CMat,
    Pi1_0: CMat,
    Pi2_0: CMat,
    grid: GridSpec | Sequence[float],
    t: float = 0.0,
    method: str = ADAPTIVE,
    tol: Tolerances | None = None,
) -> GbdtState:
    """
    Integrate Pi1, Pi2 and S along x from the first grid point.

    Raises:
        SeedValidationError: the node identity fails at the initial point
        SpectralOverlapError: a pole lies on sigma(A1) or sigma(A2)
    """
    tol = resolve(tol)
    _check_initial(A1, A2, S0, Pi1_0, Pi2_0, tol)
    engine = _Engine(coeffs, A1, A2, tol)
    xs = grid.xs if isinstance(grid, GridSpec) else np.asarray(grid, dtype=np.float64)
    s, p1, p2 = integrate_matrix_ode(
        lambda x, state: engine.rhs(x, t, state), [S0, Pi1_0, Pi2_0], xs, method=method, tol=tol
    )
    logger.debug("Evolved node of order %d over %d samples", A1.shape[0], len(xs))
    return GbdtState(A1, A2, xs, s, p1, p2, t)


def evolve_plane(
    x_coeffs: RationalCoeffs,
    t_coeffs: RationalCoeffs,
    A1: CMat,
    A2: CMat,
    S0: CMat,
    Pi1_0: CMat,
    Pi2_0: CMat,
    grid: GridSpec,
    order: Literal["t_first", "x_first"] = "t_first",
    method: str = ADAPTIVE,
    origin: tuple[float, float] | None = None,
    tol: Tolerances | None = None,
) -> GbdtPlane:
    """
    Two-variable evolution from (x0, t0).

    The default sweeps t along x = x0 first, then x for every t; "x_first"
    takes the other path, which agrees up to integration error when the two
    systems are compatible. When `origin` is given the initial data live
    there and are carried to (x0, t0) first, along t and then along x.
    """
    tol = resolve(tol)
    if not grid.is_2d:
        raise SeedValidationError("evolve_plane requires a 2-D grid")
    _check_initial(A1, A2, S0, Pi1_0, Pi2_0, tol)
    ex = _Engine(x_coeffs, A1, A2, tol)
    et = _Engine(t_coeffs, A1, A2, tol)
    xs, ts = grid.xs, grid.ts
    if origin is not None:
        x_org, t_org = origin
        state = [S0, Pi1_0, Pi2_0]
        if ts[0] != t_org:
            path = integrate_matrix_ode(lambda t, st: et.rhs(x_org, t, st), state, [t_org, ts[0]], method=method, tol=tol)
            state = [arr[-1] for arr in path]
        if xs[0] != x_org:
            path = integrate_matrix_ode(lambda x, st: ex.rhs(x, ts[0], st), state, [x_org, xs[0]], method=method, tol=tol)
            state = [arr[-1] for arr in path]
        S0, Pi1_0, Pi2_0 = state
    nt, nx = len(ts), len(xs)
    n, m = Pi1_0.shape
    S = np.empty((nt, nx, n, n), dtype=np.complex128)
    P1 = np.empty((nt, nx, n, m), dtype=np.complex128)
    P2 = np.empty((nt, nx, n, m), dtype=np.complex128)

    if order == "t_first":
        line = integrate_matrix_ode(lambda t, st: et.rhs(xs[0], t, st), [S0, Pi1_0, Pi2_0], ts, method=method, tol=tol)
        for it, t in enumerate(ts):
            init = [line[0][it], line[1][it], line[2][it]]
            s, p1, p2 = integrate_matrix_ode(lambda x, st: ex.rhs(x, t, st), init, xs, method=method, tol=tol)
            S[it], P1[it], P2[it] = s, p1, p2
    else:
        line = integrate_matrix_ode(lambda x, st: ex.rhs(x, ts[0], st), [S0, Pi1_0, Pi2_0], xs, method=method, tol=tol)
        for ix, x in enumerate(xs):
            init = [line[0][ix], line[1][ix], line[2][ix]]
            s, p1, p2 = integrate_matrix_ode(lambda t, st: et.rhs(x, t, st), init, ts, method=method, tol=tol)
            S[:, ix], P1[:, ix], P2[:, ix] = s, p1, p2
    return GbdtPlane(A1, A2, xs, ts, S, P1, P2)


# ---------------------------------------------------------------------------
# Transformed coefficients
# ---------------------------------------------------------------------------


def transformed_at(node: SNode, coeffs: RationalCoeffs, x: float, t: float = 0.0, tol: Tolerances | None = None) -> CoeffSample:
    """
    Transformed coefficients from one node sample.

    With X_k = Pi2* S^{-1} A1^k Pi1 and Y_k = Pi2* A2^k S^{-1} Pi1 (and their
    pole analogues with (A - c_s)^k for signed k), the top coefficient is
    unchanged and the remaining ones pick up the correction sums.
    """
    tol = resolve(tol)
    m = node.m
    poly = coeffs.poly_at(x, t, m)
    poles = coeffs.poles_at(x, t, m)
    if node.n == 0:
        return CoeffSample([q.copy() for q in poly], [[q.copy() for q in qs] for qs in poles])

    pi2h = adj(node.Pi2)
    s_inv_pi1 = solve_linear(node.S, node.Pi1, tol)
    pi2h_s_inv = adj(solve_linear(adj(node.S), node.Pi2, tol))

    def xy(p1: _Powers, p2: _Powers) -> tuple[Callable[[int], CMat], Callable[[int], CMat]]:
        xc: dict[int, CMat] = {}
        yc: dict[int, CMat] = {}

        def X(k: int) -> CMat:
            if k not in xc:
                xc[k] = pi2h_s_inv @ p1[k] @ node.Pi1
            return xc[k]

        def Y(k: int) -> CMat:
            if k not in yc:
                yc[k] = pi2h @ p2[k] @ s_inv_pi1
            return yc[k]

        return X, Y

    X, Y = xy(_Powers(node.A1, 0.0, tol), _Powers(node.A2, 0.0, tol))
    r = len(poly) - 1
    new_poly: list[CMat] = []
    for k in range(r + 1):
        if k == r:
            new_poly.append(poly[r].copy())
            continue
        corr = np.zeros((m, m), dtype=np.complex128)
        for j in range(k + 1, r + 1):
            q = poly[j]
            corr += q @ Y(j - k - 1) - X(j - k - 1) @ q
            for i in range(k + 2, j + 1):
                corr += X(j - i) @ q @ Y(i - k - 2)
        new_poly.append(poly[k] - corr)

    new_poles: list[list[CMat]] = []
    for (c, _), qs in zip(coeffs.poles, poles):
        Xs, Ys = xy(_Powers(node.A1, c, tol), _Powers(node.A2, c, tol))
        rs = len(qs)
        updated: list[CMat] = []
        for k in range(1, rs + 1):
            corr = np.zeros((m, m), dtype=np.complex128)
            for j in range(k, rs + 1):
                q = qs[j - 1]
                corr += q @ Ys(k - j - 1) - Xs(k - j - 1) @ q
                for i in range(k, j + 1):
                    corr -= Xs(i - j - 1) @ q @ Ys(k - i - 1)
            updated.append(qs[k - 1] + corr)
        new_poles.append(updated)
    return CoeffSample(new_poly, new_poles)


def transformed_coeffs(state: GbdtState, coeffs: RationalCoeffs, x: float, tol: Tolerances | None = None) -> CoeffSample:
    """Transformed coefficients at grid point x of an evolved state."""
    i = state.index_of(x)
    return transformed_at(state.node(i), coeffs, float(state.xs[i]), state.t, tol)


def xy_zero(node: SNode, tol: Tolerances | None = None) -> tuple[CMat, CMat]:
    """(X_0, Y_0) = (Pi2* S^{-1} Pi1 via S*, Pi2* S^{-1} Pi1 via S)."""
    pi2h_s_inv = adj(solve_linear(adj(node.S), node.Pi2, tol))
    return pi2h_s_inv @ node.Pi1, adj(node.Pi2) @ solve_linear(node.S, node.Pi1, tol)


def pole_factor_residual(node: SNode, c: complex = 0.0, tol: Tolerances | None = None) -> float:
    """||(I - X_{-1})(I + Y_{-1}) - I|| for the pole point c."""
    tol = resolve(tol)
    m = node.m
    if node.n == 0:
        return 0.0
    b1 = inv(node.A1 - c * eye(node.n), tol)
    b2 = inv(node.A2 - c * eye(node.n), tol)
    x_m1 = adj(node.Pi2) @ solve_linear(node.S, b1 @ node.Pi1, tol)
    y_m1 = adj(node.Pi2) @ b2 @ solve_linear(node.S, node.Pi1, tol)
    return fnorm((eye(m) - x_m1) @ (eye(m) + y_m1) - eye(m))


# ---------------------------------------------------------------------------
# Darboux property
# ---------------------------------------------------------------------------


def transfer_samples(state: GbdtState, lam: complex, tol: Tolerances | None = None) -> NDArray[np.complex128]:
    """w_A(x, lambda) at every grid point."""
    return np.stack([transfer_eval(state.node(i), lam, tol) for i in range(len(state.xs))])


def transfer_residual(state: GbdtState, coeffs: RationalCoeffs, lam: complex, tol: Tolerances | None = None) -> float:
    """max_i ||D_h w_A - (G~ w_A - w_A G)|| over interior samples."""
    tol = resolve(tol)
    w = transfer_samples(state, lam, tol)
    xs = state.xs
    pole_points = [c for c, _ in coeffs.poles]
    m = state.Pi1.shape[2]
    worst = 0.0
    for i in range(1, len(xs) - 1):
        dw = (w[i + 1] - w[i - 1]) / (xs[i + 1] - xs[i - 1])
        g = coeffs.G(xs[i], lam, state.t, m)
        g_new = transformed_at(state.node(i), coeffs, xs[i], state.t, tol).G(lam, pole_points)
        worst = max(worst, fnorm(dw - (g_new @ w[i] - w[i] @ g)))
    return worst


def eigenfunction_residual(state: GbdtState, coeffs: RationalCoeffs, tol: Tolerances | None = None) -> float:
    """
    Residual of the transformed generalized eigenfunction Pi2* S^{-1}:

        (Pi2* S^{-1})_x = -( sum q~_k Pi2* S^{-1} A1^k + sum q~_sk Pi2* S^{-1} (A1 - c_s)^{-k} ).
    """
    tol = resolve(tol)
    xs = state.xs
    f = np.stack([adj(solve_linear(adj(state.S[i]), state.Pi2[i], tol)) for i in range(len(xs))])
    p1 = _Powers(state.A1, 0.0, tol)
    pole_powers = [_Powers(state.A1, c, tol) for c, _ in coeffs.poles]
    worst = 0.0
    for i in range(1, len(xs) - 1):
        df = (f[i + 1] - f[i - 1]) / (xs[i + 1] - xs[i - 1])
        sample = transformed_at(state.node(i), coeffs, xs[i], state.t, tol)
        rhs = np.zeros_like(f[i])
        for k, q in enumerate(sample.poly):
            rhs -= q @ f[i] @ p1[k]
        for pw, qs in zip(pole_powers, sample.poles):
            for k, q in enumerate(qs, start=1):
                rhs -= q @ f[i] @ pw[-k]
        worst = max(worst, fnorm(df - rhs))
    return worst


def darboux_residual(state: GbdtState, coeffs: RationalCoeffs, lam: complex, tol: Tolerances | None = None) -> float:
    """Largest of the transfer-matrix and eigenfunction residuals."""
    return max(transfer_residual(state, coeffs, lam, tol), eigenfunction_residual(state, coeffs, tol))


def transformed_plane_G(
    plane: GbdtPlane,
    coeffs: RationalCoeffs,
    lam: complex,
    tol: Tolerances | None = None,
) -> NDArray[np.complex128]:
    """Transformed coefficient matrix sampled over the plane, indexed [t, x]."""
    pole_points = [c for c, _ in coeffs.poles]
    out = []
    for it, t in enumerate(plane.ts):
        row = [
            transformed_at(plane.node(it, ix), coeffs, x, t, tol).G(lam, pole_points)
            for ix, x in enumerate(plane.xs)
        ]
        out.append(np.stack(row))
    return np.stack(out)
