"""
Tests for the main chiral field transformation.

Bug categories prevented:
- Pole residues with the wrong sign at lambda = +-1
- Transformed fields evaluated at a spectral parameter other than 0
- Sweep order changing the result
"""

import numpy as np
import numpy.testing as npt
import pytest

from gbdt.core.snode import transfer_eval
from gbdt.errors import SeedValidationError
from gbdt.models import GridSpec
from gbdt.services.residuals import pde_report
from gbdt.systems.nonlinear.chiral import (
    ChiralField,
    ChiralSeed,
    chiral_plane,
    chiral_residual_at,
    chiral_transform,
    field_by_name,
)

GRID = GridSpec(x0=0.0, x1=0.5, nx=21, t0=0.0, t1=0.5, nt=21)


def make_seed(field: ChiralField) -> ChiralSeed:
    """A1 = 3, A2 = 2, Pi1 = Pi2 = [1, 1] couples both components: S = (3 - 2)^{-1} Pi1 Pi2* = 2."""
    row = np.array([[1.0, 1.0]], dtype=np.complex128)
    return ChiralSeed(np.array([[3.0 + 0j]]), np.array([[2.0 + 0j]]), 2 * np.eye(1, dtype=np.complex128), row, row.copy(), field)


class TestField:
    """Bug prevented: seed fields that are not solutions producing meaningless transforms."""

    @pytest.mark.parametrize("x,t", [(0.0, 0.0), (0.4, -0.2), (1.3, 0.9)])
    def test_abelian_solves_equation(self, x, t):
        field = ChiralField.abelian()
        z = field.z(x, t)
        z_xt = np.diag([np.cos(x), -1.0]) @ np.diag([1.0, -np.sin(t)]) @ z
        assert chiral_residual_at(z, field.z_x(x, t), field.z_t(x, t), z_xt) < 1e-13

    def test_abelian_is_two_by_two(self):
        with pytest.raises(SeedValidationError):
            field_by_name("abelian", 3)

    def test_identity_violation_rejected(self):
        row = np.array([[1.0, 0.0]], dtype=np.complex128)
        with pytest.raises(SeedValidationError):
            ChiralSeed(np.array([[3.0 + 0j]]), np.array([[2.0 + 0j]]), 2 * np.eye(1, dtype=np.complex128), row, row, ChiralField.identity(2))


class TestTransform:
    """Bug prevented: z~ = w_A(x, t, 0) z failing the chiral equation."""

    def test_identity_field_gives_constant(self):
        seed = make_seed(ChiralField.identity(2))
        solution = chiral_transform(seed, GRID)
        expected = transfer_eval(chiral_plane(seed, GRID).node(0, 0), 0.0)
        npt.assert_allclose(solution.values[-1, -1], expected, atol=1e-12)

    def test_transformed_field_not_diagonal(self):
        values = chiral_transform(make_seed(ChiralField.abelian()), GRID).values
        assert np.min(np.abs(values[..., 0, 1])) > 1e-2
        z, z_x = values[10, 10], (values[10, 11] - values[10, 9]) / (2 * GRID.hx)
        z_t = (values[11, 10] - values[9, 10]) / (2 * GRID.ht)
        left, right = z_x @ np.linalg.inv(z), z_t @ np.linalg.inv(z)
        assert np.max(np.abs(left @ right - right @ left)) > 1e-2

    def test_equation_second_order(self):
        seed = make_seed(ChiralField.abelian())
        report = pde_report("chiral", lambda g: chiral_transform(seed, g), GRID)
        assert report.passed()
        assert 1.8 <= report.order <= 2.2

    def test_identity_preserved(self):
        solution = chiral_transform(make_seed(ChiralField.abelian()), GRID)
        assert solution.metadata["identity_residual"] < 1e-7

    def test_path_independent(self):
        seed = make_seed(ChiralField.abelian())
        a = chiral_plane(seed, GRID, "t_first")
        b = chiral_plane(seed, GRID, "x_first")
        npt.assert_allclose(a.S, b.S, atol=1e-7)

    def test_needs_plane(self):
        with pytest.raises(SeedValidationError):
            chiral_transform(make_seed(ChiralField.identity(2)), GridSpec(x0=0.0, x1=1.0, nx=11))
