"""
Tests for the focusing NLS solutions.

Bug categories prevented:
- Soliton amplitude or phase off by the factor in v~ = v + 2 [1 0] Pi* S^{-1} Pi [0; 1]
- Plane-wave background fundamental solution on the wrong branch
- Modulation periods computed from floating-point pi instead of exact rationals
"""

import math

import numpy as np
import numpy.testing as npt
import pytest

from gbdt.errors import SeedValidationError
from gbdt.models import GridSpec
from gbdt.services.residuals import fnls_defect, pde_report
from gbdt.systems.nonlinear.nls import (
    Background,
    NlsSeed,
    identity_residual,
    modulation_period,
    modulation_seed,
    nls_solution,
    pi_at,
    plane_wave_residual,
    potential_at,
    residue_gramian,
    s_from,
)

GRID = GridSpec(x0=-2.0, x1=2.0, nx=41, t0=0.0, t1=0.5, nt=21)


@pytest.fixture
def soliton() -> NlsSeed:
    """a = i, f = [1, 1]: v~ = 2 exp(-2it) / cosh(2x)."""
    return NlsSeed.build([1j], [[1.0, 1.0]])


class TestSeed:
    """Bug prevented: seeds with a_k = conj a_l dividing by zero in S."""

    def test_real_parameter_rejected(self):
        with pytest.raises(SeedValidationError):
            NlsSeed.build([1.0], [[1.0, 0.0]])

    def test_zero_vector_rejected(self):
        with pytest.raises(SeedValidationError):
            NlsSeed.build([1j], [[0.0, 0.0]])

    def test_global_positivity(self, soliton):
        assert soliton.globally_positive
        assert not NlsSeed.build([-1j], [[1.0, 1.0]]).globally_positive

    def test_payload(self):
        seed = NlsSeed.from_payload({"a": [[0.0, 2.0]], "f": [[[1.0, 0.0], [0.0, 0.0]]], "background": "plane_wave"})
        assert seed.background is Background.PLANE_WAVE


class TestGramian:
    """Bug prevented: closed-form S drifting from the integral it stands for."""

    @pytest.mark.parametrize(
        "seed",
        [
            NlsSeed.build([1j], [[1.0, 1.0]]),
            NlsSeed.build([1j, 0.5 + 1.5j], [[1.0, 1.0], [1.0, -1.0]]),
            modulation_seed([5, 5, 13], [3, 4, 5], [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
        ],
        ids=["soliton", "two-solitons", "three-modulations"],
    )
    @pytest.mark.parametrize("x, t", [(0.0, 0.0), (0.7, 0.2), (-1.1, 0.4)])
    def test_matches_closed_form(self, seed, x, t):
        pi = pi_at(seed, x, t)
        npt.assert_allclose(residue_gramian(seed, pi), s_from(seed, pi), rtol=1e-8, atol=1e-8)

    def test_integral_is_nonnegative(self):
        seed = NlsSeed.build([1j, 0.5 + 1.5j], [[1.0, 1.0], [1.0, -1.0]])
        s = residue_gramian(seed, pi_at(seed, 0.3, 0.1))
        npt.assert_allclose(s, s.conj().T, atol=1e-10)
        assert np.min(np.linalg.eigvalsh(s)) > 0

    def test_lower_half_plane_rejected(self):
        seed = NlsSeed.build([-1j], [[1.0, 1.0]])
        with pytest.raises(SeedValidationError):
            residue_gramian(seed, pi_at(seed, 0.0, 0.0))


class TestSoliton:
    """Bug prevented: soliton solutions that drift from the closed form."""

    @pytest.mark.parametrize("x,t", [(0.0, 0.0), (0.3, 0.2), (-1.1, 0.45)])
    def test_closed_form(self, soliton, x, t):
        expected = 2 * np.exp(-2j * t) / np.cosh(2 * x)
        assert potential_at(soliton, x, t) == pytest.approx(expected, rel=1e-12, abs=1e-14)

    def test_identity(self, soliton):
        for x, t in [(0.0, 0.0), (1.5, 0.3), (-2.0, 0.5)]:
            pi = pi_at(soliton, x, t)
            assert identity_residual(soliton, pi, s_from(soliton, pi)) < 1e-13

    def test_equation_second_order(self, soliton):
        report = pde_report("fnls", lambda g: nls_solution(soliton, g), GRID)
        assert report.passed()
        assert 1.8 <= report.order <= 2.2

    def test_two_solitons_positive(self):
        seed = NlsSeed.build([1j, 0.5 + 1.5j], [[1.0, 1.0], [1.0, -1.0]])
        solution = nls_solution(seed, GRID)
        assert solution.metadata["min_eigenvalue_S"] > 0
        assert np.all(np.isfinite(solution.values))

    def test_zero_seed_keeps_background(self):
        empty = NlsSeed.build([], np.zeros((0, 2)), Background.PLANE_WAVE)
        solution = nls_solution(empty, GRID)
        npt.assert_allclose(solution.values[:, 0, 0, 0], np.exp(-1j * GRID.ts), atol=1e-15)


class TestPlaneWave:
    """Bug prevented: the background fundamental solution missing exp(-itj/2)."""

    def test_background_solves_equation(self):
        for t in (0.0, 0.7, 3.0):
            v = np.array([[np.exp(-1j * t)]])
            assert fnls_defect(v, -1j * v, np.zeros((1, 1))) <= 1e-10

    @pytest.mark.parametrize("lam", [0.5j, 1.0 + 0.3j, -2.0 + 0.1j])
    def test_fundamental_solution(self, lam):
        assert plane_wave_residual(0.4, 0.9, lam) < 1e-6


class TestModulation:
    """Bug prevented: modulation seeds whose solution is not periodic in t."""

    def test_period_exact(self):
        assert modulation_period([5], [3]) == pytest.approx(36 * math.pi)

    def test_not_pythagorean(self):
        with pytest.raises(SeedValidationError):
            modulation_seed([2], [1], [[1.0, 0.0]])

    def test_periodic_in_time(self):
        seed = modulation_seed([5], [3], [[1.0, 0.0]])
        period = modulation_period([5], [3])
        for x in (-0.5, 0.0, 0.8):
            assert potential_at(seed, x, 0.3 + period) == pytest.approx(potential_at(seed, x, 0.3), abs=1e-7)

    def test_equation_second_order(self):
        seed = modulation_seed([5], [3], [[1.0, 0.0]])
        report = pde_report("fnls", lambda g: nls_solution(seed, g), GridSpec(x0=-1.0, x1=1.0, nx=41, t0=0.0, t1=1.0, nt=41))
        assert report.passed()
        assert 1.8 <= report.order <= 2.2
