"""
Tests for S-nodes and their transfer functions.

Bug categories prevented:
- Node identity check passing inconsistent data
- Transfer function and its inverse drifting apart
- Factorization producing factors whose product is not the original
"""

import numpy as np
import numpy.testing as npt
import pytest

from gbdt.core.snode import (
    SNode,
    compose,
    factorize,
    transfer_eval,
    transfer_inverse_eval,
    verify_identity,
)
from gbdt.errors import SeedValidationError, SpectralOverlapError

LAMBDAS = [0.2 + 0.3j, -1.0 + 0.1j, 3.0 - 0.5j, 0.7 + 5j, -4.0 - 4j]


class TestIdentity:
    """Bug prevented: nodes violating A1 S - S A2 = Pi1 Pi2* reaching the engine."""

    def test_random_node_valid(self, make_node):
        node = make_node(4, 2)
        assert verify_identity(node) < 1e-10

    def test_perturbed_node_rejected(self, make_node):
        node = make_node(3, 2)
        with pytest.raises(SeedValidationError):
            SNode(node.A1, node.A2, node.S + 1e-3, node.Pi1, node.Pi2)

    def test_shape_mismatch_rejected(self, make_node):
        node = make_node(3, 2)
        with pytest.raises(SeedValidationError):
            SNode(node.A1, node.A2, node.S, node.Pi1, node.Pi2[:, :1])


class TestTransfer:
    """Bug prevented: w_A^{-1} formula using A1 where A2 belongs."""

    @pytest.mark.parametrize("n,m", [(1, 1), (3, 2), (6, 4)], ids=["scalar", "small", "large"])
    def test_inverse_is_inverse(self, make_node, n, m):
        node = make_node(n, m)
        for lam in LAMBDAS:
            product = transfer_eval(node, lam) @ transfer_inverse_eval(node, lam)
            npt.assert_allclose(product, np.eye(m), atol=1e-10)

    def test_empty_node_is_identity(self):
        npt.assert_array_equal(transfer_eval(SNode.empty(3), 1j), np.eye(3))

    def test_spectrum_point_raises(self, make_node):
        node = make_node(2, 1)
        with pytest.raises(SpectralOverlapError):
            transfer_eval(node, np.linalg.eigvals(node.A1)[0])


class TestFactorize:
    """Bug prevented: Schur-complement factor built with the wrong coupling sign."""

    def test_compose_then_factorize(self, make_node):
        first, second = make_node(2, 2), make_node(3, 2)
        joined = compose(first, second)
        for lam in LAMBDAS:
            npt.assert_allclose(
                transfer_eval(joined, lam),
                transfer_eval(second, lam) @ transfer_eval(first, lam),
                atol=1e-9,
            )
        f1, f2 = factorize(joined, 2)
        for lam in LAMBDAS:
            npt.assert_allclose(
                transfer_eval(f2, lam) @ transfer_eval(f1, lam),
                transfer_eval(joined, lam),
                atol=1e-9,
            )

    def test_split_requires_triangular_blocks(self, make_node):
        with pytest.raises(SeedValidationError):
            factorize(make_node(3, 1), 1)

    def test_full_split_returns_empty_second(self, make_node):
        node = make_node(2, 1)
        f1, f2 = factorize(node, 2)
        assert f1 is node
        assert f2.n == 0

    def test_incompatible_widths(self, make_node):
        with pytest.raises(SeedValidationError):
            compose(make_node(1, 1), make_node(1, 2))


class TestCodec:
    """Bug prevented: node JSON losing the imaginary parts."""

    def test_round_trip(self, make_node):
        node = make_node(2, 2)
        again = SNode.from_dict(node.to_dict())
        npt.assert_array_equal(again.S, node.S)
        npt.assert_array_equal(again.Pi2, node.Pi2)
