"""
Tests for the residual oracles.

Bug categories prevented:
- Convergence order computed from rounding noise
- Reports passing with a first-order residual
- Stencils indexing t and x the wrong way round
- Field files passing verification with a corrupted sample
"""

import numpy as np
import numpy.testing as npt
import pytest
from scipy.linalg import expm

from gbdt.core.solution import SolutionGrid
from gbdt.errors import SeedValidationError, VerificationError
from gbdt.models import GridSpec
from gbdt.services.residuals import (
    ResidualReport,
    estimate_order,
    field_report,
    ode_residual,
    pde_residual,
    zero_curvature_residual,
    zero_curvature_samples,
)

PLANE = GridSpec(x0=0.0, x1=1.0, nx=41, t0=0.0, t1=1.0, nt=41)


def sampled(grid: GridSpec, fn, system: str = "test", **metadata) -> SolutionGrid:
    values = np.array([[fn(x, t) for x in grid.xs] for t in grid.ts], dtype=np.complex128)[..., None, None]
    return SolutionGrid(system=system, grid=grid, values=values, metadata=metadata)


class TestReport:
    """Bug prevented: acceptance rules letting a wrong construction through."""

    def test_order_from_halving(self):
        assert estimate_order(4e-4, 1e-4) == pytest.approx(2.0)

    def test_order_skipped_at_rounding_level(self):
        assert estimate_order(1e-13, 1e-14) is None

    @pytest.mark.parametrize(
        "report,expected",
        [
            (ResidualReport(max_residual=1e-4, h=0.1, order=2.01, refined_residual=2.5e-5), True),
            (ResidualReport(max_residual=1e-4, h=0.1, order=1.0, refined_residual=5e-5), False),
            (ResidualReport(max_residual=2.0, h=0.1, order=2.0, refined_residual=0.5), False),
            (ResidualReport(max_residual=0.5, h=0.1), True),
            (ResidualReport(max_residual=0.5, h=0.01), False),
            (ResidualReport(max_residual=1e-14, h=0.1, refined_residual=1e-15), True),
        ],
        ids=["second-order", "first-order", "constant-too-large", "no-order", "no-order-too-large", "exact"],
    )
    def test_passed(self, report, expected):
        assert report.passed() is expected

    def test_check_raises_with_location(self):
        report = ResidualReport(max_residual=2.0, h=0.1, location=(3, 4))
        with pytest.raises(VerificationError) as exc:
            report.check("fnls")
        assert exc.value.location == (3, 4)

    def test_limit_scales_with_h(self):
        report = ResidualReport(max_residual=1e-2, h=0.1, order=2.0, refined_residual=2.5e-3)
        assert report.scaled_residual == pytest.approx(1.0)
        assert report.passed(limit=1.0)
        assert not report.passed(limit=0.99)

    def test_tolerance_table_limit(self, tol):
        report = ResidualReport(max_residual=1e-2, h=0.1, order=2.0, refined_residual=2.5e-3)
        assert not report.passed(tol.override(residual_constant=1e-12))

    @pytest.mark.parametrize("residual,h", [(-1.0, 0.1), (1.0, 0.0)], ids=["negative", "zero-spacing"])
    def test_invalid_report_rejected(self, residual, h):
        with pytest.raises(SeedValidationError):
            ResidualReport(max_residual=residual, h=h)

    def test_to_dict(self):
        data = ResidualReport(max_residual=1e-4, h=0.1, location=(2,)).to_dict()
        assert data["location"] == [2]
        assert data["exact"] is False
        assert data["scaled_residual"] == pytest.approx(1e-2)


class TestOde:
    """Bug prevented: the ODE oracle comparing u_x with u G instead of G u."""

    def test_matrix_exponential(self):
        m = np.array([[0.3, 1.0], [-2.0, 0.1j]], dtype=np.complex128)
        report = ode_residual(lambda x: expm(x * m), lambda x: m, GridSpec(x0=0.0, x1=1.0, nx=21))
        assert report.passed()
        assert 1.8 <= report.order <= 2.2

    def test_too_few_points(self):
        with pytest.raises(SeedValidationError):
            ode_residual(lambda x: np.eye(1), lambda x: np.zeros((1, 1)), GridSpec(x0=0.0, x1=1.0, nx=4))


class TestZeroCurvature:
    """Bug prevented: D_t G and D_x F taken along the same axis."""

    def test_gradient_pair(self):
        # G = phi_x, F = phi_t for phi = sin(x) e^t: G_t = F_x exactly
        g = lambda x, t: np.array([[np.cos(x) * np.exp(t)]])  # noqa: E731
        f = lambda x, t: np.array([[np.sin(x) * np.exp(t)]])  # noqa: E731
        report = zero_curvature_residual(g, f, PLANE)
        assert report.passed()
        assert 1.8 <= report.order <= 2.2

    def test_incompatible_pair_fails(self):
        g = lambda x, t: np.array([[x * t]])  # noqa: E731
        f = lambda x, t: np.array([[0.0]])  # noqa: E731
        assert not zero_curvature_residual(g, f, PLANE).passed()

    def test_shape_mismatch(self):
        with pytest.raises(SeedValidationError):
            zero_curvature_samples(np.zeros((6, 6, 2, 2)), np.zeros((6, 7, 2, 2)), 0.1, 0.1)

    def test_needs_plane(self):
        with pytest.raises(SeedValidationError):
            zero_curvature_residual(lambda x, t: np.eye(1), lambda x, t: np.eye(1), GridSpec(x0=0.0, x1=1.0, nx=11))


class TestPde:
    """Bug prevented: equation residuals built with wrong signs or factors."""

    def test_plane_wave_fnls(self):
        field = sampled(PLANE, lambda x, t: np.exp(-1j * t))
        refined = sampled(PLANE.refined(), lambda x, t: np.exp(-1j * t))
        report = pde_residual("fnls", field, refined)
        assert report.passed()
        assert 1.8 <= report.order <= 2.2

    def test_wrong_sign_detected(self):
        field = sampled(PLANE, lambda x, t: np.exp(1j * t))
        assert pde_residual("fnls", field).max_residual > 1.0

    def test_zero_is_exact_for_sine_gordon(self):
        field = sampled(PLANE, lambda x, t: 0.0)
        report = pde_residual("sine-gordon", field, sampled(PLANE.refined(), lambda x, t: 0.0))
        assert report.exact
        assert report.order is None

    def test_nwave_needs_dispersion(self):
        with pytest.raises(SeedValidationError):
            pde_residual("nwave", sampled(PLANE, lambda x, t: 0.0))

    def test_nwave_reads_metadata(self):
        field = sampled(PLANE, lambda x, t: 0.0, D=[1.0], D_hat=[2.0])
        assert pde_residual("nwave", field).max_residual == 0.0

    def test_unknown_equation(self):
        with pytest.raises(ValueError):
            pde_residual("kdv", sampled(PLANE, lambda x, t: 0.0))

    def test_one_dimensional_field_rejected(self):
        grid = GridSpec(x0=0.0, x1=1.0, nx=11)
        field = SolutionGrid(system="test", grid=grid, values=np.zeros((11, 1, 1), dtype=np.complex128))
        with pytest.raises(SeedValidationError):
            pde_residual("fnls", field)


class TestFieldReport:
    """Bug prevented: field files accepted without an order estimate or with the fault location lost."""

    def test_order_from_subgrid(self):
        field = sampled(PLANE, lambda x, t: np.exp(-1j * t))
        report = field_report("fnls", field)
        assert report.coarse_residual is not None
        assert 1.8 <= report.order <= 2.2
        assert report.passed()

    def test_single_sample_fault(self):
        field = sampled(PLANE, lambda x, t: np.exp(-1j * t))
        field.values[20, 13, 0, 0] += 1.0
        report = field_report("fnls", field)
        assert not report.passed()
        assert report.location == (20, 13)

    def test_even_grid_has_no_order(self):
        grid = GridSpec(x0=0.0, x1=1.0, nx=40, t0=0.0, t1=1.0, nt=40)
        report = field_report("fnls", sampled(grid, lambda x, t: np.exp(-1j * t)))
        assert report.order is None
        assert report.coarse_residual is None
        assert report.passed()

    def test_subgrid_keeps_every_other_sample(self):
        field = sampled(PLANE, lambda x, t: x + 10 * t)
        coarse = field.coarsened()
        assert (coarse.grid.nx, coarse.grid.nt) == (21, 21)
        npt.assert_array_equal(coarse.values[..., 0, 0], field.values[::2, ::2, 0, 0])
