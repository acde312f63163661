"""
Tests for the elliptic sine-Gordon and sinh-Gordon transformations.

Bug categories prevented:
- Seeds without the conjugation symmetry accepted, so Z is not diagonal
- Phase of Z_11 unwrapped inconsistently across the grid or away from the origin
- Transformed fields failing their elliptic equation
"""

import numpy as np
import numpy.testing as npt
import pytest

from gbdt.core.snode import transfer_eval
from gbdt.errors import SeedValidationError
from gbdt.models import GridSpec
from gbdt.services.residuals import pde_report
from gbdt.systems.nonlinear.elliptic import (
    EllipticSeed,
    EllipticVariant,
    SeedSolution,
    elliptic_plane,
    elliptic_transform,
    symmetry_defect,
    unwrap_from_origin,
)

GRID = GridSpec(x0=-0.25, x1=0.25, nx=21, t0=-0.25, t1=0.25, nt=21)
A = np.diag([1.0 + 1.0j, 0.5 + 0.5j])
SWAP = np.array([[0, 1], [1, 0]], dtype=np.complex128)


@pytest.fixture
def sine_seed() -> EllipticSeed:
    """conj A = U A^{-1} U^{-1} and conj Pi = U Pi with U the swap; Z(0, 0) = -I."""
    return EllipticSeed.build("sine-gordon", A, [[1.0, 1j], [1.0, -1j]], U=SWAP)


@pytest.fixture
def sinh_seed() -> EllipticSeed:
    """conj Pi = U Pi J; Z(0, 0) = I."""
    return EllipticSeed.build("sinh-gordon", A, [[1.0, 1j], [-1j, 1.0]], U=SWAP)


class TestSeed:
    """Bug prevented: the identity A S A* + S = Pi J Pi* solved with the wrong right-hand side."""

    def test_sine_identity_solution(self, sine_seed):
        npt.assert_allclose(sine_seed.S0, [[0.0, 1j], [-1j, 0.0]], atol=1e-12)

    def test_sinh_identity_solution(self, sinh_seed):
        npt.assert_allclose(sinh_seed.S0, [[2 / 3, 1j], [-1j, 4 / 3]], atol=1e-12)

    def test_symmetry_holds(self, sine_seed, sinh_seed):
        assert symmetry_defect(sine_seed) < 1e-12
        assert symmetry_defect(sinh_seed) < 1e-12

    def test_symmetry_violation_rejected(self):
        with pytest.raises(SeedValidationError):
            EllipticSeed.build("sine-gordon", A, [[1.0, 1j], [1.0, 1j]], U=SWAP)

    def test_singular_a_rejected(self):
        with pytest.raises(SeedValidationError):
            EllipticSeed.build("sinh-gordon", np.diag([1.0, 0.0]), [[1.0, 0.0], [0.0, 1.0]], S0=np.eye(2))

    def test_payload(self):
        data = {"A": [[[2.0, 0.0]]], "Pi0": [[[1.0, 0.0], [1.0, 0.0]]]}
        seed = EllipticSeed.from_payload(EllipticVariant.SINH, data)
        assert seed.S0[0, 0] == pytest.approx(0.4)


class TestTransferAtOrigin:
    """Bug prevented: Pi2(0, 0) = A^{-1} Pi J built without J, so Z loses its diagonal form."""

    def test_sine_diagonal(self, sine_seed):
        z = transfer_eval(elliptic_plane(sine_seed, SeedSolution.zero(), GRID).node(10, 10), 0.0)
        npt.assert_allclose(z, -np.eye(2), atol=1e-10)

    def test_sinh_diagonal(self, sinh_seed):
        z = transfer_eval(elliptic_plane(sinh_seed, SeedSolution.zero(), GRID).node(10, 10), 0.0)
        npt.assert_allclose(z, np.eye(2), atol=1e-10)


class TestTransform:
    """Bug prevented: v^ that is complex or fails its equation away from the origin."""

    def test_sine_unimodular(self, sine_seed):
        solution = elliptic_transform(sine_seed, GRID)
        assert solution.metadata["modulus_defect"] <= 1e-9
        assert solution.metadata["offdiag_max"] <= 1e-9
        npt.assert_allclose(solution.components["abs_z11"], 1.0, atol=1e-9)

    def test_sinh_real(self, sinh_seed):
        solution = elliptic_transform(sinh_seed, GRID)
        assert solution.metadata["imag_defect"] <= 1e-9
        assert solution.metadata["offdiag_max"] <= 1e-9
        assert np.all(np.isfinite(solution.values))

    def test_sinh_closed_form(self, sinh_seed):
        # Z_11 = (cosh(3(x+t)/4) + 3 sin((x-t)/4)) / (cosh(3(x+t)/4) - 3 sin((x-t)/4))
        x, t = np.meshgrid(GRID.xs, GRID.ts)
        c, s = np.cosh(0.75 * (x + t)), 3 * np.sin((x - t) / 4)
        values = elliptic_transform(sinh_seed, GRID).values[..., 0, 0].real
        npt.assert_allclose(values, 2 * np.log((c + s) / (c - s)), atol=1e-9)

    @pytest.mark.parametrize(
        "variant,pi0",
        [("sine-gordon", [[1.0, 1j], [1.0, -1j]]), ("sinh-gordon", [[1.0, 1j], [-1j, 1.0]])],
        ids=["sine", "sinh"],
    )
    def test_equation_second_order(self, variant, pi0):
        seed = EllipticSeed.build(variant, A, pi0, U=SWAP)
        report = pde_report(variant, lambda g: elliptic_transform(seed, g), GRID)
        assert report.passed()
        assert 1.8 <= report.order <= 2.2

    def test_values_are_real(self, sinh_seed):
        values = elliptic_transform(sinh_seed, GRID).values
        npt.assert_array_equal(values.imag, 0.0)

    def test_needs_plane(self, sine_seed):
        with pytest.raises(SeedValidationError):
            elliptic_transform(sine_seed, GridSpec(x0=0.0, x1=1.0, nx=11))


class TestPhase:
    """Bug prevented: a 2 pi offset in v^ coming from where the unwrap starts."""

    def test_unwrap_keeps_origin_value(self):
        xs, ts = np.linspace(-2.0, 2.0, 41), np.linspace(-1.0, 1.0, 21)
        x, t = np.meshgrid(xs, ts)
        phase = 3 * x + 2 * t
        npt.assert_allclose(unwrap_from_origin(np.angle(np.exp(1j * phase)), xs, ts), phase, atol=1e-12)

    def test_origin_off_grid_uses_nearest_sample(self):
        xs, ts = np.linspace(0.1, 2.1, 21), np.linspace(0.05, 1.05, 11)
        x, t = np.meshgrid(xs, ts)
        phase = 3 * x + 2 * t
        out = unwrap_from_origin(np.angle(np.exp(1j * phase)), xs, ts)
        npt.assert_allclose(out, phase, atol=1e-12)
