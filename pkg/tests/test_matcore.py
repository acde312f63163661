"""
Tests for the matrix toolkit.

Bug categories prevented:
- Singular solves returning garbage instead of raising
- Sylvester solutions accepted for overlapping spectra
- Positivity gate accepting indefinite or non-Hermitian matrices
- Gramian integral off by a transpose or a factor
- Riccati solver returning a non-admissible root
"""

import numpy as np
import numpy.testing as npt
import pytest
from scipy.integrate import quad_vec
from scipy.linalg import expm as scipy_expm

from gbdt.core.matcore import (
    ADAPTIVE,
    RiccatiForm,
    adj,
    cmat,
    exp_gramian,
    expm,
    grid_map,
    hermitian_sqrt,
    integrate_matrix_ode,
    is_posdef,
    krylov_rank,
    riccati_residual,
    solve_inverse_riccati,
    solve_linear,
    solve_sylvester,
)
from gbdt.errors import (
    NonFiniteError,
    RiccatiError,
    SeedValidationError,
    SingularMatrixError,
    SpectralOverlapError,
)

from .conftest import random_complex


class TestConstruction:
    """Bug prevented: vectors and scalars silently treated as the wrong shape."""

    def test_scalar_becomes_one_by_one(self):
        assert cmat(2.5).shape == (1, 1)

    def test_vector_becomes_column(self):
        assert cmat([1, 2, 3]).shape == (3, 1)

    def test_rejects_non_finite(self):
        with pytest.raises(NonFiniteError):
            cmat([[1.0, np.nan]])

    def test_rejects_three_dimensional(self):
        with pytest.raises(SeedValidationError):
            cmat(np.zeros((2, 2, 2)))


class TestExpm:
    """Bug prevented: complex time parameter dropped or applied twice."""

    def test_zero_time_is_identity(self, rng):
        m = random_complex(rng, 3, 3)
        npt.assert_allclose(expm(m, 0.0), np.eye(3), atol=0)

    def test_complex_time(self, rng):
        m = random_complex(rng, 3, 3, 0.3)
        npt.assert_allclose(expm(m, 2j), scipy_expm(2j * m), rtol=1e-12)


class TestSolveLinear:
    """Bug prevented: near-singular S producing enormous potentials instead of a flag."""

    def test_solves_well_conditioned(self, rng):
        m = random_complex(rng, 4, 4) + 4 * np.eye(4)
        rhs = random_complex(rng, 4, 2)
        x = solve_linear(m, rhs)
        npt.assert_allclose(m @ x, rhs, atol=1e-12)

    def test_singular_raises(self):
        m = np.array([[1, 2], [2, 4]], dtype=np.complex128)
        with pytest.raises(SingularMatrixError):
            solve_linear(m, np.eye(2, dtype=np.complex128))

    def test_condition_cap_is_configurable(self, tol):
        m = np.diag([1.0, 1e-8]).astype(np.complex128)
        solve_linear(m, np.eye(2, dtype=np.complex128), tol)
        with pytest.raises(SingularMatrixError):
            solve_linear(m, np.eye(2, dtype=np.complex128), tol.override(cond_cap=1e6))


class TestSylvester:
    """Bug prevented: sign convention AX - XB = C flipped to AX + XB = C."""

    def test_residual(self, rng):
        a = random_complex(rng, 3, 3, 0.3) + 2j * np.eye(3)
        b = random_complex(rng, 2, 2, 0.3) - 2j * np.eye(2)
        c = random_complex(rng, 3, 2)
        x = solve_sylvester(a, b, c)
        npt.assert_allclose(a @ x - x @ b, c, atol=1e-11)

    def test_overlapping_spectra_rejected(self):
        a = np.diag([1.0, 2.0]).astype(np.complex128)
        with pytest.raises(SpectralOverlapError):
            solve_sylvester(a, a, np.eye(2, dtype=np.complex128))


class TestPositivity:
    """Bug prevented: indefinite S accepted, so potentials blow up along x."""

    @pytest.mark.parametrize(
        "diag,expected",
        [
            ([1.0, 2.0], True),
            ([1.0, -1e-3], False),
            ([1.0, 0.0], False),
            ([1.0, 1e-20], False),
        ],
        ids=["positive", "indefinite", "singular", "numerically-singular"],
    )
    def test_diagonal_cases(self, diag, expected):
        assert is_posdef(np.diag(diag).astype(np.complex128)) is expected

    def test_non_hermitian_raises(self):
        with pytest.raises(SeedValidationError):
            is_posdef(np.array([[1, 1], [0, 1]], dtype=np.complex128))

    def test_hermitian_sqrt(self, rng):
        b = random_complex(rng, 3, 3)
        x = b @ adj(b) + np.eye(3)
        r = hermitian_sqrt(x)
        npt.assert_allclose(r @ r, x, atol=1e-11)
        npt.assert_allclose(hermitian_sqrt(x, inverse=True) @ r, np.eye(3), atol=1e-11)


class TestKrylov:
    """Bug prevented: non-minimal realizations passed to the Riccati solver."""

    def test_full_rank(self):
        a = np.diag([1.0, 2.0]).astype(np.complex128)
        assert krylov_rank(a, np.array([[1], [1]], dtype=np.complex128)) == 2

    def test_deficient_rank(self):
        a = np.diag([1.0, 2.0]).astype(np.complex128)
        assert krylov_rank(a, np.array([[1], [0]], dtype=np.complex128)) == 1


class TestExpGramian:
    """
    Bug prevented: the closed-form S(x) of radial and PE seeds drifting from
    the integral it represents.
    """

    @pytest.mark.parametrize("x", [1e-4, 0.3, 2.5], ids=["series", "mid", "block-exp"])
    def test_matches_quadrature(self, rng, x):
        m = random_complex(rng, 3, 3, 0.4)
        c = random_complex(rng, 3, 3)
        c = c @ adj(c)
        expected, _ = quad_vec(lambda t: scipy_expm(t * m) @ c @ scipy_expm(t * adj(m)), 0.0, x, epsabs=1e-13)
        npt.assert_allclose(exp_gramian(m, c, x), expected, rtol=1e-9, atol=1e-13)

    def test_zero_length(self, rng):
        m = random_complex(rng, 2, 2)
        npt.assert_array_equal(exp_gramian(m, np.eye(2, dtype=np.complex128), 0.0), np.zeros((2, 2)))


class TestRiccati:
    """
    Bug prevented: the inverse problem recovering a seed from the wrong root
    of the quadratic matrix equation.
    """

    def _scalar_weyl_data(self):
        a = np.array([[-1j * (2 + np.sqrt(3))]])
        b = np.array([[1.0 + 0j]])
        c = np.array([[2 * np.sqrt(3) + 0j]])
        return a, b, c

    def test_self_adjoint_scalar(self):
        a, b, c = self._scalar_weyl_data()
        x = solve_inverse_riccati(RiccatiForm.SA_DIRAC, a, b, c)
        assert riccati_residual(RiccatiForm.SA_DIRAC, a, b, c, x) < 1e-10
        assert x[0, 0].real > 0
        # 12 x^2 - 2(2 + sqrt 3) x + 1 = 0
        roots = np.roots([12.0, -2 * (2 + np.sqrt(3)), 1.0])
        assert np.min(np.abs(roots - x[0, 0].real)) < 1e-10

    def test_non_minimal_rejected(self):
        a = np.diag([1j, 2j])
        b = np.array([[1.0], [0.0]], dtype=np.complex128)
        c = np.array([[1.0, 1.0]], dtype=np.complex128)
        with pytest.raises(RiccatiError):
            solve_inverse_riccati(RiccatiForm.SA_DIRAC, a, b, c)

    def test_empty(self):
        x = solve_inverse_riccati(RiccatiForm.SKEW, np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)))
        assert x.shape == (0, 0)


class TestIntegration:
    """Bug prevented: integrators that miss the grid abscissae or lose accuracy."""

    ROTATION = np.array([[0, 1], [-1, 0]], dtype=np.complex128)

    def test_exponential_growth(self):
        m = self.ROTATION
        xs = np.linspace(0.0, 2.0, 11)
        (traj,) = integrate_matrix_ode(lambda x, s: [m @ s[0]], [np.eye(2)], xs, substeps=8)
        npt.assert_allclose(traj[-1], scipy_expm(2.0 * m), atol=1e-9)

    def test_rk4_is_fourth_order(self):
        m = self.ROTATION
        errors = []
        for n in (5, 9, 17):
            (traj,) = integrate_matrix_ode(lambda x, s: [m @ s[0]], [np.eye(2)], np.linspace(0.0, 2.0, n))
            errors.append(np.linalg.norm(traj[-1] - scipy_expm(2.0 * m)))
        assert np.log2(errors[0] / errors[1]) >= 3.7
        assert np.log2(errors[1] / errors[2]) >= 3.7

    def test_adaptive_matches_expm(self):
        m = self.ROTATION + 0.5j * np.eye(2)
        xs = np.linspace(0.0, 3.0, 7)
        (traj,) = integrate_matrix_ode(lambda x, s: [m @ s[0]], [np.eye(2)], xs, method=ADAPTIVE)
        for x, value in zip(xs, traj):
            npt.assert_allclose(value, scipy_expm(x * m), atol=1e-10)

    def test_adaptive_closed_form_pi(self):
        """Pi' = -i A Pi D against Pi(x) = [exp(-i d_k x A) f_k]."""
        a = np.array([[0.3 + 1j, 0.2], [0.0, -0.5 + 0.7j]])
        d = np.diag([2.0, 1.0])
        f = np.array([[1.0, 0.5], [0.2j, 1.0]], dtype=np.complex128)
        xs = np.linspace(0.0, 2.0, 2001)
        (traj,) = integrate_matrix_ode(lambda x, s: [-1j * a @ s[0] @ d], [f], xs, method=ADAPTIVE)
        for i in (0, 1000, 2000):
            x = xs[i]
            expected = np.column_stack([scipy_expm(-1j * d[k, k] * x * a) @ f[:, k] for k in range(2)])
            npt.assert_allclose(traj[i], expected, atol=1e-8)

    def test_adaptive_repeated_and_decreasing_points(self):
        m = self.ROTATION
        xs = [0.0, 0.0, -0.5, -1.0]
        (traj,) = integrate_matrix_ode(lambda x, s: [m @ s[0]], [np.eye(2)], xs, method=ADAPTIVE)
        assert traj.shape == (4, 2, 2)
        npt.assert_allclose(traj[1], np.eye(2), atol=1e-15)
        npt.assert_allclose(traj[3], scipy_expm(-1.0 * m), atol=1e-10)

    def test_adaptive_needs_monotone_points(self):
        with pytest.raises(SeedValidationError):
            integrate_matrix_ode(lambda x, s: [s[0]], [np.eye(1)], [0.0, 1.0, 0.5], method=ADAPTIVE)

    def test_non_finite_raises(self):
        with pytest.raises(NonFiniteError):
            integrate_matrix_ode(lambda x, s: [s[0] * np.inf], [np.eye(1)], [0.0, 1.0])


class TestGridMap:
    """Bug prevented: threaded sampling reordering grid points."""

    def test_order_preserved_with_threads(self, mocker):
        mocker.patch("gbdt.core.matcore.settings.threads", 4)
        assert grid_map(lambda x: x * x, range(50)) == [x * x for x in range(50)]
