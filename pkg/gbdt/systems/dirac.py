"""
Dirac-type systems

Explicit potentials, fundamental solutions, Weyl functions and scattering
data for three classes of Dirac-type systems built from a trivial background:

- self-adjoint (pseudo-exponential potentials, S(0) = I),
- generalized pseudo-exponential (S(0) Hermitian, possibly indefinite, so the
  potential may have isolated singularities),
- skew-self-adjoint.

The matching inverse problems recover seeds from rational Weyl functions or
reflection coefficients through minimal realizations and Riccati equations.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from gbdt._compat import StrEnum
from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import cumulative_trapezoid

from ..config import Tolerances, resolve
from ..core.gbdt_core import GbdtState, RationalCoeffs, const, evolve
from ..core.matcore import (
    ADAPTIVE,
    CMat,
    RiccatiForm,
    adj,
    condition,
    eye,
    expm,
    fnorm,
    grid_map,
    hermitian_part,
    hermitian_sqrt,
    integrate_matrix_ode,
    inv,
    is_posdef,
    solve_inverse_riccati,
    solve_linear,
    solve_sylvester,
    spectral_separation,
    zeros,
)
from ..core.realization import Realization, evaluate, is_controllable, minimal_realize
from ..core.snode import SNode, transfer_eval, transfer_inverse_eval
from ..core.solution import SolutionGrid
from ..errors import (
    ConvergenceError,
    NumericalError,
    SeedValidationError,
    SingularMatrixError,
    SpectralOverlapError,
)
from ..models import DiracSeedPayload, GridSpec, decode_matrix, encode_matrix

logger = logging.getLogger(__name__)


class DiracKind(StrEnum):
    SELF_ADJOINT = "pe"
    GENERALIZED = "gpe"
    SKEW = "pe2"


def j_matrix(p1: int, p2: int) -> CMat:
    """diag(I_p1, -I_p2)."""
    return np.diag(np.r_[np.ones(p1), -np.ones(p2)]).astype(np.complex128)


def k_matrix(p: int) -> CMat:
    """(1/sqrt 2) [[I, -I], [I, I]]."""
    i = eye(p)
    return np.block([[i, -i], [i, i]]) / math.sqrt(2)


# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiracSeed:
    """Parameter matrices A, S(0), Phi_1(0), Phi_2(0) of a Dirac-type seed."""
    kind: DiracKind
    A: CMat
    S0: CMat
    Phi1: CMat
    Phi2: CMat

    def __post_init__(self) -> None:
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.S0.shape != (n, n):
            raise SeedValidationError("A and S0 must be square of the same order")
        if self.Phi1.shape[0] != n or self.Phi2.shape[0] != n:
            raise SeedValidationError(f"Phi1 and Phi2 must have {n} rows")
        if self.kind is not DiracKind.GENERALIZED and self.p1 != self.p2:
            raise SeedValidationError("Phi1 and Phi2 must have the same width")
        tol = resolve(None)
        if self.kind is not DiracKind.GENERALIZED and fnorm(self.S0 - eye(n)) > tol.seed_identity_rtol * max(1, n):
            raise SeedValidationError("S(0) must be the identity for this seed kind")
        if fnorm(self.S0 - adj(self.S0)) > tol.hermitian_rtol * max(1.0, fnorm(self.S0)):
            raise SeedValidationError("S(0) must be Hermitian")
        residual = seed_identity_residual(self)
        if residual > tol.seed_identity_rtol:
            raise SeedValidationError(f"Seed identity violated (relative residual {residual:.3e})")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p1(self) -> int:
        return self.Phi1.shape[1]

    @property
    def p2(self) -> int:
        return self.Phi2.shape[1]

    @property
    def m(self) -> int:
        return self.p1 + self.p2

    @property
    def j(self) -> CMat:
        return j_matrix(self.p1, self.p2)

    @property
    def Pi0(self) -> CMat:
        return np.hstack([self.Phi1, self.Phi2])

    @classmethod
    def zero(cls, kind: DiracKind, p1: int, p2: int | None = None) -> "DiracSeed":
        p2 = p1 if p2 is None else p2
        return cls(kind, zeros(0, 0), zeros(0, 0), zeros(0, p1), zeros(0, p2))

    @classmethod
    def build(cls, kind: DiracKind | str, A: Any, Phi1: Any, Phi2: Any, S0: Any = None) -> "DiracSeed":
        a = np.atleast_2d(np.asarray(A, dtype=np.complex128))
        n = a.shape[0] if a.size else 0
        phi1 = np.asarray(Phi1, dtype=np.complex128).reshape(n, -1)
        phi2 = np.asarray(Phi2, dtype=np.complex128).reshape(n, -1)
        s0 = eye(n) if S0 is None else np.atleast_2d(np.asarray(S0, dtype=np.complex128))
        return cls(DiracKind(kind), a.reshape(n, n), s0.reshape(n, n), phi1, phi2)

    @classmethod
    def from_payload(cls, kind: DiracKind | str, data: dict[str, Any]) -> "DiracSeed":
        payload = DiracSeedPayload(**data)
        a = decode_matrix(payload.A)
        n = a.shape[0]
        if n == 0:
            return cls.zero(DiracKind(kind), payload.p1, payload.p2)
        phi1 = decode_matrix(payload.Phi1)
        phi2 = decode_matrix(payload.Phi2)
        s0 = eye(n) if payload.S0 is None else decode_matrix(payload.S0, (n, n))
        return cls(DiracKind(kind), a, s0, phi1.reshape(n, -1), phi2.reshape(n, -1))

    def to_dict(self) -> dict[str, Any]:
        return {
            "A": encode_matrix(self.A),
            "S0": encode_matrix(self.S0),
            "Phi1": encode_matrix(self.Phi1),
            "Phi2": encode_matrix(self.Phi2),
        }


def _identity_rhs(seed: DiracSeed, pi: CMat) -> CMat:
    if seed.kind is DiracKind.SKEW:
        return 1j * pi @ adj(pi)
    return 1j * pi @ seed.j @ adj(pi)


def seed_identity_residual(seed: DiracSeed) -> float:
    """Relative residual of A S(0) - S(0) A* = i Pi(0) j Pi(0)* (i Pi Pi* for skew seeds)."""
    if seed.n == 0:
        return 0.0
    lhs = seed.A @ seed.S0 - seed.S0 @ adj(seed.A)
    scale = max(1.0, 2 * fnorm(seed.A) * fnorm(seed.S0) + fnorm(seed.Pi0) ** 2)
    return fnorm(lhs - _identity_rhs(seed, seed.Pi0)) / scale


def full_range(seed: DiracSeed, tol: Tolerances | None = None) -> tuple[bool, bool]:
    """Whether the Krylov spaces of (A, Phi1) and (A, Phi2) fill C^n."""
    if seed.n == 0:
        return True, True
    return is_controllable(seed.A, seed.Phi1, tol), is_controllable(seed.A, seed.Phi2, tol)


# ---------------------------------------------------------------------------
# Pi(x), S(x) and the node along x
# ---------------------------------------------------------------------------


def pi_at(seed: DiracSeed, x: float) -> CMat:
    """Pi(x) = [e^{-ixA} Phi1(0), e^{ixA} Phi2(0)]."""
    return np.hstack([expm(seed.A, -1j * x) @ seed.Phi1, expm(seed.A, 1j * x) @ seed.Phi2])


def closed_form_available(seed: DiracSeed, tol: Tolerances | None = None) -> bool:
    """S(x) is a Sylvester solve when sigma(A) and sigma(A*) are well separated."""
    tol = resolve(tol)
    scale = max(1.0, fnorm(seed.A))
    return spectral_separation(seed.A, adj(seed.A)) >= tol.closed_form_gap * scale


def _s_closed(seed: DiracSeed, x: float, tol: Tolerances) -> CMat:
    pi = pi_at(seed, x)
    return hermitian_part(solve_sylvester(seed.A, adj(seed.A), _identity_rhs(seed, pi), tol))


def _s_derivative(seed: DiracSeed, pi: CMat) -> CMat:
    if seed.kind is DiracKind.SKEW:
        return pi @ seed.j @ adj(pi)
    return pi @ adj(pi)


def _s_by_ode(seed: DiracSeed, xs: Sequence[float]) -> dict[float, CMat]:
    """Integrate S' from S(0) to every abscissa, on each side of 0."""
    rhs = lambda x, st: [_s_derivative(seed, pi_at(seed, x))]  # noqa: E731
    out: dict[float, CMat] = {}
    for side in (sorted(x for x in xs if x >= 0), sorted((x for x in xs if x < 0), reverse=True)):
        if not side:
            continue
        pts = [0.0] + [x for x in side if x != 0.0]
        (traj,) = integrate_matrix_ode(rhs, [seed.S0], pts, method=ADAPTIVE)
        for x, s in zip(pts, traj):
            out[float(x)] = hermitian_part(s)
    return out


def s_at(seed: DiracSeed, x: float, tol: Tolerances | None = None) -> CMat:
    """S(x) by the closed form when available, otherwise by integration."""
    tol = resolve(tol)
    if seed.n == 0:
        return zeros(0, 0)
    if closed_form_available(seed, tol):
        return _s_closed(seed, x, tol)
    return _s_by_ode(seed, [x])[float(x)]


def s_samples(seed: DiracSeed, xs: Sequence[float], tol: Tolerances | None = None) -> tuple[list[CMat], str]:
    """S at every abscissa and the path used ("closed_form" or "ode")."""
    tol = resolve(tol)
    if seed.n == 0:
        return [zeros(0, 0) for _ in xs], "closed_form"
    if closed_form_available(seed, tol):
        return grid_map(lambda x: _s_closed(seed, float(x), tol), xs), "closed_form"
    logger.debug("S(x) by integration: spectra of A and A* are not separated")
    table = _s_by_ode(seed, [float(x) for x in xs])
    return [table[float(x)] for x in xs], "ode"


def node_at(seed: DiracSeed, x: float, s: CMat | None = None, tol: Tolerances | None = None) -> SNode:
    """S-node (A, A*, S(x), Pi(x), Pi2(x)) with Pi2* = i j Pi* (i Pi* for skew seeds)."""
    pi = pi_at(seed, x)
    s = s_at(seed, x, tol) if s is None else s
    pi2 = -1j * pi if seed.kind is DiracKind.SKEW else -1j * pi @ seed.j
    return SNode.new_unchecked(seed.A, adj(seed.A), s, pi, pi2)


def potential_from(seed: DiracSeed, pi: CMat, s: CMat, tol: Tolerances | None = None) -> CMat:
    """v~ = c Pi_1* S^{-1} Pi_2 with c = -2i (self-adjoint, generalized) or 2 (skew)."""
    if seed.n == 0:
        return zeros(seed.p1, seed.p2)
    factor = 2.0 if seed.kind is DiracKind.SKEW else -2j
    return factor * adj(pi[:, : seed.p1]) @ solve_linear(s, pi[:, seed.p1 :], tol)


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


def _inertia(s: CMat) -> int:
    return int(np.sum(np.linalg.eigvalsh(hermitian_part(s)) < 0))


def singular_points(
    seed: DiracSeed, xs: Sequence[float], tol: Tolerances | None = None
) -> list[float]:
    """
    Zeros of det S located by an inertia scan over xs and bisection.

    Only generalized seeds can have them.
    """
    tol = resolve(tol)
    if seed.n == 0 or seed.kind is not DiracKind.GENERALIZED:
        return []
    s_list, _ = s_samples(seed, xs, tol)
    counts = [_inertia(s) for s in s_list]
    roots: list[float] = []
    for k in range(len(xs) - 1):
        if counts[k] == counts[k + 1]:
            continue
        lo, hi = float(xs[k]), float(xs[k + 1])
        c_lo = counts[k]
        while hi - lo > tol.bisection_tol:
            mid = (lo + hi) / 2
            if _inertia(s_at(seed, mid, tol)) == c_lo:
                lo = mid
            else:
                hi = mid
        roots.append((lo + hi) / 2)
    if roots:
        logger.debug("det S vanishes at %s", roots)
    return roots


def pe_potential(seed: DiracSeed, grid: GridSpec, tol: Tolerances | None = None) -> SolutionGrid:
    """
    Sample the potential v~(x) on a 1-D grid.

    Raises:
        SingularMatrixError: S(x) is not positive at a sample of a self-adjoint
            or skew seed
    """
    tol = resolve(tol)
    xs = grid.xs
    s_list, path = s_samples(seed, xs, tol)
    roots = singular_points(seed, xs, tol)
    values = np.empty((len(xs), seed.p1, seed.p2), dtype=np.complex128)
    for i, (x, s) in enumerate(zip(xs, s_list)):
        if seed.kind is not DiracKind.GENERALIZED and not is_posdef(s, tol):
            raise SingularMatrixError(f"S(x) is not positive at x={x}")
        near_root = any(abs(x - r) <= tol.singular_window for r in roots)
        if near_root or (seed.n and condition(s) > tol.cond_cap):
            values[i] = np.nan
            continue
        values[i] = potential_from(seed, pi_at(seed, x), s, tol)
    flagged = int(np.sum(~np.all(np.isfinite(values), axis=(1, 2))))
    if flagged:
        logger.warning("%d samples flagged near singular points of the potential", flagged)
    finite = values[np.all(np.isfinite(values), axis=(1, 2))]
    sup_norm = max((float(np.linalg.norm(v, 2)) for v in finite), default=0.0)
    return SolutionGrid(
        system=f"dirac-{seed.kind.value}",
        grid=grid,
        values=values,
        metadata={
            "seed_identity_residual": seed_identity_residual(seed),
            "s_path": path,
            "singular_points": roots,
            "sup_norm": sup_norm,
        },
    )


def transformed_V(seed: DiracSeed, x: float, tol: Tolerances | None = None) -> CMat:
    """V~ = [[0, v~], [v~*, 0]]."""
    v = potential_from(seed, pi_at(seed, x), s_at(seed, x, tol), tol)
    return np.block([[zeros(seed.p1, seed.p1), v], [adj(v), zeros(seed.p2, seed.p2)]])


def system_matrix(seed: DiracSeed, x: float, lam: complex, tol: Tolerances | None = None) -> CMat:
    """i(lambda j + j V~) for self-adjoint seeds, i lambda j + j V~ for skew seeds."""
    j = seed.j
    v = transformed_V(seed, x, tol)
    if seed.kind is DiracKind.SKEW:
        return 1j * lam * j + j @ v
    return 1j * (lam * j + j @ v)


def fundamental_solution(seed: DiracSeed, x: float, lam: complex, tol: Tolerances | None = None) -> CMat:
    """
    u~(x, lambda) = w_A(x, lambda) e^{ix lambda j} w_A(0, lambda)^{-1}.

    Generalized seeds use the unnormalized form w_A(x, lambda) e^{ix lambda j}.
    """
    tol = resolve(tol)
    e = np.diag(np.exp(1j * x * lam * np.diag(seed.j).real))
    if seed.n == 0:
        return e
    w = transfer_eval(node_at(seed, x, tol=tol), lam, tol)
    if seed.kind is DiracKind.GENERALIZED:
        return w @ e
    return w @ e @ transfer_inverse_eval(node_at(seed, 0.0, tol=tol), lam, tol)


def engine_coeffs(seed: DiracSeed) -> RationalCoeffs:
    """q1 = -ij on the trivial background (q0 = 0)."""
    return RationalCoeffs(poly=(None, const(-1j * seed.j)))


def engine_state(seed: DiracSeed, grid: GridSpec | Sequence[float], tol: Tolerances | None = None) -> GbdtState:
    """Evolve the seed through the general engine from x = 0."""
    pi2 = -1j * seed.Pi0 if seed.kind is DiracKind.SKEW else -1j * seed.Pi0 @ seed.j
    return evolve(engine_coeffs(seed), seed.A, adj(seed.A), seed.S0, seed.Pi0, pi2, grid, tol=tol)


# ---------------------------------------------------------------------------
# Weyl functions and reflection coefficients
# ---------------------------------------------------------------------------


def halfplane_points(halfplane: Literal["upper", "lower"], count: int = 30, arg: float = math.pi / 2) -> NDArray[np.complex128]:
    """Logarithmically spaced |lambda| in [1, 1e3] on a fixed ray."""
    sign = 1 if halfplane == "upper" else -1
    radii = np.logspace(0, 3, count)
    return radii * np.exp(1j * sign * arg)


@dataclass(frozen=True)
class WeylFunction:
    """Rational Weyl function given by a realization."""
    realization: Realization
    halfplane: Literal["upper", "lower"]
    m1: float | None = None  # observed sup of the potential (skew case)

    def __call__(self, lam: complex) -> CMat:
        return evaluate(self.realization, lam)

    def herglotz_defect(self, points: Sequence[complex] | None = None) -> float:
        """-min eigenvalue of Im phi over the sample points (<= 0 means Herglotz)."""
        pts = halfplane_points(self.halfplane) if points is None else points
        worst = -math.inf
        for lam in pts:
            phi = self(lam)
            im = (phi - adj(phi)) / 2j
            worst = max(worst, -float(np.min(np.linalg.eigvalsh(im))))
        return worst


def weyl_direct(seed: DiracSeed) -> WeylFunction:
    """phi(lambda) = iI + 2 Phi2* (lambda - A_breve)^{-1} Phi1, A_breve = A - i Phi1 (Phi1 + Phi2)*."""
    if seed.kind is not DiracKind.SELF_ADJOINT:
        raise SeedValidationError("weyl_direct requires a self-adjoint seed")
    a = seed.A - 1j * seed.Phi1 @ adj(seed.Phi1 + seed.Phi2)
    r = Realization(a, seed.Phi1.copy(), 2 * adj(seed.Phi2), 1j * eye(seed.p1))
    return WeylFunction(r, "upper")


def skew_weyl_direct(seed: DiracSeed, grid: GridSpec | None = None, tol: Tolerances | None = None) -> WeylFunction:
    """
    phi(lambda) = i Phi1* (lambda - A_breve)^{-1} Phi2, A_breve = A - i Phi2 Phi2*.

    With a grid, the sup of ||v~|| over it is recorded as the working bound M1.
    """
    if seed.kind is not DiracKind.SKEW:
        raise SeedValidationError("skew_weyl_direct requires a skew seed")
    a = seed.A - 1j * seed.Phi2 @ adj(seed.Phi2)
    r = Realization(a, seed.Phi2.copy(), 1j * adj(seed.Phi1), zeros(seed.p1, seed.p2))
    m1 = pe_potential(seed, grid, tol).metadata["sup_norm"] if grid is not None else None
    return WeylFunction(r, "lower", m1)


def reflection_from_weyl(phi: WeylFunction | Realization, tol: Tolerances | None = None) -> Realization:
    """
    R_L = -(I + i phi)(I - i phi)^{-1} = I - 2 (I - i phi)^{-1}.

    With E = I - iD and C' = -i E^{-1} C the result is
    (A - B C', B E^{-1}, 2 C', I - 2 E^{-1}).
    """
    tol = resolve(tol)
    r = phi.realization if isinstance(phi, WeylFunction) else phi
    p = r.shape[0]
    e = eye(p) - 1j * r.D
    if condition(e) > tol.cond_cap:
        raise SingularMatrixError("I - i phi(infinity) is singular")
    e_inv = solve_linear(e, eye(p), tol)
    c_prime = -1j * e_inv @ r.C
    return Realization(r.A - r.B @ c_prime, r.B @ e_inv, 2 * c_prime, eye(p) - 2 * e_inv)


def _seed_from_x(kind: DiracKind, a: CMat, b: CMat, c: CMat, x: CMat) -> DiracSeed:
    xh = hermitian_sqrt(x)
    xih = hermitian_sqrt(x, inverse=True)
    a_new = xih @ a @ xh + 1j * xih @ b @ adj(b) @ xih
    if kind is DiracKind.SKEW:
        return DiracSeed(kind, a_new, eye(a.shape[0]), 1j * xh @ adj(c), xih @ b)
    return DiracSeed(kind, a_new, eye(a.shape[0]), xih @ b, -1j * xh @ adj(c))


def weyl_inverse(phi: WeylFunction | Realization, tol: Tolerances | None = None) -> DiracSeed:
    """
    Recover a self-adjoint seed from a rational Weyl function.

    Raises:
        SeedValidationError: phi(infinity) != iI or Im phi < 0 at a sample
        RiccatiError: no positive Riccati solution
    """
    tol = resolve(tol)
    wf = phi if isinstance(phi, WeylFunction) else WeylFunction(phi, "upper")
    r = wf.realization
    p = r.shape[0]
    if r.shape != (p, p) or fnorm(r.D - 1j * eye(p)) > 1e-9:
        raise SeedValidationError("Weyl function must tend to iI at infinity")
    if wf.herglotz_defect() > 1e-10:
        raise SeedValidationError("Weyl function is not Herglotz on the upper half-plane")
    refl = minimal_realize(reflection_from_weyl(wf, tol), tol)
    if refl.order == 0:
        return DiracSeed.zero(DiracKind.SELF_ADJOINT, p)
    x = solve_inverse_riccati(RiccatiForm.SA_DIRAC, refl.A, refl.B, refl.C, tol)
    return _seed_from_x(DiracKind.SELF_ADJOINT, refl.A, refl.B, refl.C, x)


def skew_weyl_inverse(phi: WeylFunction | Realization, tol: Tolerances | None = None) -> DiracSeed:
    """
    Recover a skew seed from a strictly proper rational Weyl function.

    Raises:
        SeedValidationError: phi is not strictly proper
        RiccatiError: no positive Riccati solution
    """
    tol = resolve(tol)
    r = phi.realization if isinstance(phi, WeylFunction) else phi
    p = r.shape[0]
    if r.shape != (p, p) or fnorm(r.D) > 1e-9:
        raise SeedValidationError("Skew Weyl function must be strictly proper and square")
    r = minimal_realize(r, tol)
    if r.order == 0:
        return DiracSeed.zero(DiracKind.SKEW, p)
    x = solve_inverse_riccati(RiccatiForm.SKEW, r.A, r.B, r.C, tol)
    return _seed_from_x(DiracKind.SKEW, r.A, r.B, r.C, x)


# ---------------------------------------------------------------------------
# Generalized seeds: scattering
# ---------------------------------------------------------------------------


def omega_limit(seed: DiracSeed, tol: Tolerances | None = None) -> CMat:
    """
    omega = lim (e^{-ixA} S(x) e^{ixA*})^{-1} as x -> infinity.

    The bracket equals E Y0 E* - Z with E = e^{-2ixA}, A Y0 - Y0 A* = i Phi1 Phi1*
    and A Z - Z A* = i Phi2 Phi2*. It is evaluated at x = 1, 2, 4, ... until
    successive values agree.

    Raises:
        SpectralOverlapError: sigma(A) meets sigma(A*)
        ConvergenceError: no agreement before the x cap
    """
    tol = resolve(tol)
    n = seed.n
    if n == 0:
        return zeros(0, 0)
    y0 = solve_sylvester(seed.A, adj(seed.A), 1j * seed.Phi1 @ adj(seed.Phi1), tol)
    z = solve_sylvester(seed.A, adj(seed.A), 1j * seed.Phi2 @ adj(seed.Phi2), tol)
    upper = float(np.min(np.linalg.eigvals(seed.A).imag)) > 0 and condition(y0) <= tol.cond_cap

    def omega_at(x: float) -> CMat:
        if upper:
            f = expm(seed.A, 2j * x)
            inner = y0 - f @ z @ adj(f)
            return adj(f) @ solve_linear(inner, f, tol)
        e = expm(seed.A, -2j * x)
        return inv(e @ y0 @ adj(e) - z, tol)

    x = 1.0
    previous = omega_at(x)
    while x < tol.omega_max_x:
        x *= 2
        try:
            current = omega_at(x)
        except NumericalError as e:
            raise ConvergenceError(f"omega iteration broke down at x={x}") from e
        if not np.all(np.isfinite(current)):
            raise ConvergenceError(f"omega iteration overflowed at x={x}")
        if fnorm(current - previous) <= tol.omega_rtol * max(1.0, fnorm(current)):
            logger.debug("omega converged at x=%g", x)
            return hermitian_part(current)
        previous = current
    raise ConvergenceError(f"omega did not converge by x={tol.omega_max_x}")


@dataclass(frozen=True)
class GpeScattering:
    """Transmission and reflection coefficients as realizations."""
    T_L: Realization
    R_L: Realization
    T_R: Realization
    R_R: Realization
    omega: CMat


def gpe_scattering(seed: DiracSeed, tol: Tolerances | None = None) -> GpeScattering:
    """
    Scattering data of a generalized seed with theta = A - i Phi1 Phi1* S0^{-1}.

    T_L = I + i Phi1* S0^{-1} (theta - lambda)^{-1} Phi1 and so on, written as
    realizations in lambda.
    """
    tol = resolve(tol)
    if seed.kind is not DiracKind.GENERALIZED:
        raise SeedValidationError("gpe_scattering requires a generalized seed")
    p1, p2, n = seed.p1, seed.p2, seed.n
    if n == 0:
        return GpeScattering(
            Realization.build([], [], [], eye(p1)),
            Realization.build([], [], [], zeros(p2, p1)),
            Realization.build([], [], [], eye(p2)),
            Realization.build([], [], [], zeros(p1, p2)),
            zeros(0, 0),
        )
    ok1, ok2 = full_range(seed, tol)
    if not (ok1 and ok2):
        logger.warning("Seed is not full range (Phi1: %s, Phi2: %s)", ok1, ok2)
    s0_inv = solve_linear(seed.S0, eye(n), tol)
    omega = omega_limit(seed, tol)
    theta = seed.A - 1j * seed.Phi1 @ adj(seed.Phi1) @ s0_inv
    phi1, phi2 = seed.Phi1, seed.Phi2
    b_right = (eye(n) - seed.S0 @ omega) @ phi2
    t_l = Realization(theta, phi1.copy(), -1j * adj(phi1) @ s0_inv, eye(p1))
    r_l = Realization(theta, phi1.copy(), -1j * adj(phi2) @ s0_inv, zeros(p2, p1))
    t_r = Realization(theta, b_right, -1j * adj(phi2) @ s0_inv, eye(p2))
    r_r = Realization(
        np.block([[theta, zeros(n, n)], [zeros(n, n), adj(seed.A)]]),
        np.vstack([b_right, omega @ phi2]),
        np.hstack([-1j * adj(phi1) @ s0_inv, -1j * adj(phi1)]),
        zeros(p1, p2),
    )
    return GpeScattering(t_l, r_l, t_r, r_r, omega)


def special_solution_coefficients(seed: DiracSeed, lam: complex, tol: Tolerances | None = None) -> tuple[CMat, CMat]:
    """
    (T_L, R_L) at lambda from the special solution Y(x) = w_A(x, lambda)[:, :p1] e^{ix lambda}.

    Y(0) = w_A(0, lambda)[:, :p1], T_L = Y_1(0)^{-1}, R_L = Y_2(0) Y_1(0)^{-1}.
    """
    tol = resolve(tol)
    w0 = transfer_eval(node_at(seed, 0.0, seed.S0, tol), lam, tol)
    y1, y2 = w0[: seed.p1, : seed.p1], w0[seed.p1 :, : seed.p1]
    t_l = solve_linear(y1, eye(seed.p1), tol)
    return t_l, y2 @ t_l


def chi(seed: DiracSeed, omega: CMat, lam: complex, tol: Tolerances | None = None) -> CMat:
    """Large-x limit block chi(lambda) = I + i Phi2* omega (A - lambda)^{-1} Phi2."""
    return eye(seed.p2) + 1j * adj(seed.Phi2) @ omega @ solve_linear(seed.A - lam * eye(seed.n), seed.Phi2, tol)


def gpe_inverse(refl: Realization, tol: Tolerances | None = None, samples: int = 100) -> DiracSeed:
    """
    Recover a generalized seed from a strictly proper reflection coefficient.

    Raises:
        SeedValidationError: R is not strictly proper or not contractive on the
            sampled real axis
        RiccatiError: the Riccati equation has no admissible solution
    """
    tol = resolve(tol)
    p2, p1 = refl.shape
    if fnorm(refl.D) > 1e-9:
        raise SeedValidationError("Reflection coefficient must be strictly proper")
    for lam in real_axis_points(samples):
        try:
            norm = float(np.linalg.norm(evaluate(refl, lam, tol), 2))
        except SpectralOverlapError as e:
            raise SeedValidationError(f"Reflection coefficient has a real pole near {lam}") from e
        if norm > 1 + 1e-9:
            raise SeedValidationError(f"Reflection coefficient is not contractive (norm {norm:.6f} at {lam:.4g})")
    r = minimal_realize(refl, tol)
    if r.order == 0:
        return DiracSeed.zero(DiracKind.GENERALIZED, p1, p2)
    x = solve_inverse_riccati(RiccatiForm.GPE, r.A, r.B, r.C, tol)
    s0 = hermitian_part(solve_linear(x, eye(r.order), tol))
    a = r.A + 1j * r.B @ adj(r.B) @ x
    return DiracSeed(DiracKind.GENERALIZED, a, s0, r.B.copy(), -1j * s0 @ adj(r.C))


def real_axis_points(count: int = 100) -> NDArray[np.float64]:
    """Real sample points spread over the whole axis (tangent spacing)."""
    u = (np.arange(count) + 0.5) / count
    return np.tan(math.pi * (u - 0.5)) * 2.0


# ---------------------------------------------------------------------------
# Identities
# ---------------------------------------------------------------------------


def unitarity_residual(a: CMat, s: CMat, pi: CMat, lam: complex, tol: Tolerances | None = None) -> float:
    """
    ||w* w - [I - i(lambda - conj lambda) Pi* (A* - conj lambda)^{-1} S^{-1} (A - lambda)^{-1} Pi]||
    for w = I - i Pi* S^{-1} (A - lambda)^{-1} Pi and A S - S A* = i Pi Pi*.
    """
    n, m = pi.shape
    res = solve_linear(a - lam * eye(n), pi, tol)
    w = eye(m) - 1j * adj(pi) @ solve_linear(s, res, tol)
    left = solve_linear(adj(a) - np.conj(lam) * eye(n), eye(n), tol)
    expected = eye(m) - 1j * (lam - np.conj(lam)) * adj(pi) @ left @ solve_linear(s, res, tol)
    return fnorm(adj(w) @ w - expected)


def weyl_integral(
    seed: DiracSeed,
    phi: CMat,
    lam: complex,
    xs: Sequence[float],
    tol: Tolerances | None = None,
) -> NDArray[np.float64]:
    """
    Cumulative trapezoid integral (scipy) over xs of the trace of the Weyl integrand.

    Self-adjoint: [I, i phi*] K u~* u~ K* [I; -i phi]; skew: [phi*, I] u~* u~ [phi; I].
    """
    p = seed.p1
    if seed.kind is DiracKind.SKEW:
        left = np.vstack([phi, eye(p)])
    else:
        left = adj(k_matrix(p)) @ np.vstack([eye(p), -1j * phi])
    vals = []
    for x in xs:
        u = fundamental_solution(seed, float(x), lam, tol) @ left
        vals.append(float(np.trace(adj(u) @ u).real))
    return cumulative_trapezoid(vals, np.asarray(xs, dtype=np.float64), initial=0.0)
