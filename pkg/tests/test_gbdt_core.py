"""
Tests for the GBDT engine.

Bug categories prevented:
- S(x) equation that lets the node identity drift along x
- Transformed coefficients that break the Darboux property
- Poles colliding with the node spectrum going unnoticed
- Two-variable sweeps that depend on the integration path
"""

import math

import numpy as np
import numpy.testing as npt
import pytest

from gbdt.core.gbdt_core import (
    RationalCoeffs,
    const,
    darboux_residual,
    evolve,
    evolve_plane,
    pole_factor_residual,
    transformed_at,
    transformed_coeffs,
    transformed_plane_G,
    xy_zero,
)
from gbdt.core.snode import SNode
from gbdt.errors import SeedValidationError, SpectralOverlapError
from gbdt.models import GridSpec
from gbdt.services.residuals import estimate_order, zero_curvature_samples

SIGMA3 = np.diag([1.0, -1.0]).astype(np.complex128)


def dirac_like(rng) -> RationalCoeffs:
    """G = -(lambda q1 + q0) with a constant off-diagonal q0."""
    v = complex(rng.standard_normal() + 1j * rng.standard_normal())
    q0 = np.array([[0, v], [-np.conj(v), 0]], dtype=np.complex128)
    return RationalCoeffs(poly=(const(q0), const(1j * SIGMA3)))


def with_pole(rng) -> RationalCoeffs:
    base = dirac_like(rng)
    q11 = 0.3 * np.array([[1, 1j], [0, -1]], dtype=np.complex128)
    return RationalCoeffs(poly=base.poly, poles=((5.0 + 0j, (const(q11),)),))


def order_of(coarse: float, fine: float) -> float:
    return math.log2(coarse / fine)


class TestEvolve:
    """Bug prevented: the S equation missing a term so the identity fails away from x0."""

    @pytest.mark.parametrize("builder", [dirac_like, with_pole], ids=["polynomial", "with-pole"])
    def test_identity_preserved(self, rng, make_node, builder):
        node = make_node(3, 2)
        coeffs = builder(rng)
        state = evolve(coeffs, node.A1, node.A2, node.S, node.Pi1, node.Pi2, GridSpec(x0=0.0, x1=2.0, nx=201))
        assert np.max(state.identity_residuals()) < 1e-7

    def test_initial_identity_checked(self, rng, make_node):
        node = make_node(2, 2)
        with pytest.raises(SeedValidationError):
            evolve(dirac_like(rng), node.A1, node.A2, node.S + 0.1, node.Pi1, node.Pi2, [0.0, 1.0])

    def test_pole_on_spectrum_rejected(self, rng, make_node):
        node = make_node(2, 2)
        c = complex(np.linalg.eigvals(node.A1)[0])
        q = np.eye(2, dtype=np.complex128)
        coeffs = RationalCoeffs(poly=(const(q),), poles=((c, (const(q),)),))
        with pytest.raises(SpectralOverlapError):
            evolve(coeffs, node.A1, node.A2, node.S, node.Pi1, node.Pi2, [0.0, 1.0])

    def test_duplicate_poles_rejected(self):
        q = const(np.eye(2))
        with pytest.raises(SeedValidationError):
            RationalCoeffs(poly=(q,), poles=((1.0, (q,)), (1.0, (q,))))


class TestDarbouxProperty:
    """
    Bug prevented: transformed coefficients with a wrong correction sum; the
    finite-difference residual then stalls instead of decaying as h^2.
    """

    @pytest.mark.parametrize("builder", [dirac_like, with_pole], ids=["polynomial", "with-pole"])
    def test_second_order_decay(self, rng, make_node, builder):
        node = make_node(2, 2)
        coeffs = builder(rng)
        lam = 0.4 + 0.9j
        grid = GridSpec(x0=0.0, x1=1.0, nx=41)
        coarse = evolve(coeffs, node.A1, node.A2, node.S, node.Pi1, node.Pi2, grid)
        fine = evolve(coeffs, node.A1, node.A2, node.S, node.Pi1, node.Pi2, grid.refined())
        r_h = darboux_residual(coarse, coeffs, lam)
        r_h2 = darboux_residual(fine, coeffs, lam)
        assert 1.8 <= order_of(r_h, r_h2) <= 2.2


class TestTransformedCoefficients:
    """Bug prevented: the leading coefficient altered by the transformation."""

    def test_top_coefficient_unchanged(self, rng, make_node):
        node = make_node(3, 2)
        coeffs = dirac_like(rng)
        sample = transformed_at(node, coeffs, 0.0)
        npt.assert_array_equal(sample.poly[-1], 1j * SIGMA3)

    def test_empty_node_keeps_coefficients(self, rng):
        coeffs = with_pole(rng)
        sample = transformed_at(SNode.empty(2), coeffs, 0.0)
        npt.assert_array_equal(sample.poly[0], coeffs.poly[0](0.0, 0.0))
        npt.assert_array_equal(sample.poles[0][0], coeffs.poles[0][1][0](0.0, 0.0))

    def test_x0_equals_y0(self, make_node):
        x0, y0 = xy_zero(make_node(4, 2))
        npt.assert_allclose(x0, y0, atol=1e-10)

    def test_state_lookup_matches_node(self, rng, make_node):
        node = make_node(2, 2)
        coeffs = with_pole(rng)
        state = evolve(coeffs, node.A1, node.A2, node.S, node.Pi1, node.Pi2, GridSpec(x0=0.0, x1=1.0, nx=11))
        sample = transformed_coeffs(state, coeffs, 0.5)
        expected = transformed_at(state.node(5), coeffs, 0.5)
        npt.assert_allclose(sample.poly[0], expected.poly[0], atol=1e-14)
        npt.assert_allclose(sample.poles[0][0], expected.poles[0][0], atol=1e-14)

    @pytest.mark.parametrize("c", [0.0, 1.5 - 0.5j], ids=["origin", "shifted"])
    def test_pole_factor(self, make_node, c):
        assert pole_factor_residual(make_node(3, 2), c) < 1e-9


class TestPlane:
    """Bug prevented: t-first and x-first sweeps disagreeing for compatible systems."""

    def test_path_independence(self, make_node):
        node = make_node(2, 2)
        gx = RationalCoeffs(poly=(None, const(1j * SIGMA3)))
        gt = RationalCoeffs(poly=(None, None, const(0.5j * SIGMA3)))
        grid = GridSpec(x0=0.0, x1=0.5, nx=11, t0=0.0, t1=0.5, nt=11)
        a = evolve_plane(gx, gt, node.A1, node.A2, node.S, node.Pi1, node.Pi2, grid, "t_first")
        b = evolve_plane(gx, gt, node.A1, node.A2, node.S, node.Pi1, node.Pi2, grid, "x_first")
        npt.assert_allclose(a.S, b.S, atol=1e-7)
        assert np.max(a.identity_residuals()) < 1e-7

    def test_needs_two_axes(self, make_node):
        node = make_node(1, 2)
        g = RationalCoeffs(poly=(const(np.eye(2)),))
        with pytest.raises(SeedValidationError):
            evolve_plane(g, g, node.A1, node.A2, node.S, node.Pi1, node.Pi2, GridSpec(x0=0, x1=1, nx=5))

    def test_slice_is_a_line_state(self, make_node):
        node = make_node(2, 2)
        gx = RationalCoeffs(poly=(None, const(1j * SIGMA3)))
        gt = RationalCoeffs(poly=(None, None, const(0.5j * SIGMA3)))
        grid = GridSpec(x0=0.0, x1=0.5, nx=11, t0=0.0, t1=0.5, nt=11)
        plane = evolve_plane(gx, gt, node.A1, node.A2, node.S, node.Pi1, node.Pi2, grid)
        line = plane.slice(5)
        assert line.t == pytest.approx(0.25)
        npt.assert_array_equal(line.S, plane.S[5])

    def test_transformed_pair_is_compatible(self):
        """
        G~_t - F~_x + [G~, F~] decays as h^2 for a compatible seed pair.

        A1 - A2 = 2i and A1 + A2 = 1 keep S proportional to cosh(2(x + t/2)).
        """
        pi = np.array([[1.0, 1.0]], dtype=np.complex128)
        node = SNode(
            np.array([[0.5 + 1j]]), np.array([[0.5 - 1j]]), np.array([[-1j]]), pi, pi.copy()
        )
        gx = RationalCoeffs(poly=(None, const(1j * SIGMA3)))
        gt = RationalCoeffs(poly=(None, None, const(0.5j * SIGMA3)))
        lam = 0.3 + 0.2j
        residuals = []
        for grid in (GridSpec(x0=0.0, x1=0.5, nx=21, t0=0.0, t1=0.5, nt=21),
                     GridSpec(x0=0.0, x1=0.5, nx=41, t0=0.0, t1=0.5, nt=41)):
            plane = evolve_plane(gx, gt, node.A1, node.A2, node.S, node.Pi1, node.Pi2, grid)
            g = transformed_plane_G(plane, gx, lam)
            f = transformed_plane_G(plane, gt, lam)
            residuals.append(zero_curvature_samples(g, f, grid.hx, grid.ht).max_residual)
        assert 1.8 <= estimate_order(*residuals) <= 2.2
