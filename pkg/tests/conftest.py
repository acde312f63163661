"""
Pytest fixtures and configuration for the test suite.
"""

import os
from collections.abc import Callable

import numpy as np
import pytest

# Single-threaded sampling keeps failures reproducible
os.environ.setdefault("GBDT_THREADS", "1")
os.environ.setdefault("GBDT_LOG_LEVEL", "WARNING")

from gbdt.config import Tolerances, tolerances  # noqa: E402
from gbdt.core.matcore import adj, solve_sylvester  # noqa: E402
from gbdt.core.snode import SNode  # noqa: E402
from gbdt.models import GridSpec  # noqa: E402
from gbdt.systems.dirac import DiracSeed  # noqa: E402


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so random instances are the same on every run."""
    return np.random.default_rng(20240607)


@pytest.fixture
def tol() -> Tolerances:
    """The default tolerance table as an explicit override."""
    return tolerances.override()


def random_complex(rng: np.random.Generator, rows: int, cols: int, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols)))


@pytest.fixture
def make_node(rng) -> Callable[[int, int], SNode]:
    """
    Factory for random valid S-nodes.

    A1 and A2 get spectra pushed into opposite half-planes so the Sylvester
    equation for S has a unique, well-conditioned solution.
    """

    def factory(n: int, m: int) -> SNode:
        a1 = random_complex(rng, n, n, 0.5) + 2j * np.eye(n)
        a2 = random_complex(rng, n, n, 0.5) - 2j * np.eye(n)
        pi1 = random_complex(rng, n, m)
        pi2 = random_complex(rng, n, m)
        s = solve_sylvester(a1, a2, pi1 @ adj(pi2))
        return SNode(a1, a2, s, pi1, pi2)

    return factory


@pytest.fixture
def make_pe_seed(rng) -> Callable[[int, int], DiracSeed]:
    """
    Factory for random self-adjoint PE seeds with S(0) = I.

    A = H + (i/2)(Phi1 Phi1* - Phi2 Phi2*) with H Hermitian satisfies
    A - A* = i Pi j Pi*.
    """

    def factory(n: int, p: int) -> DiracSeed:
        h = random_complex(rng, n, n, 0.5)
        h = (h + adj(h)) / 2
        phi1 = random_complex(rng, n, p, 0.7)
        phi2 = random_complex(rng, n, p, 0.7)
        a = h + 0.5j * (phi1 @ adj(phi1) - phi2 @ adj(phi2))
        return DiracSeed.build("pe", a, phi1, phi2)

    return factory


@pytest.fixture
def line_grid() -> GridSpec:
    return GridSpec(x0=0.0, x1=5.0, nx=101)
