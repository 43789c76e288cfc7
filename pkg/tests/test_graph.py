import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgrl.exceptions import ContractError
from rgrl.graph import (
    locality_grad,
    locality_identity_check,
    locality_loss,
    similarity_from_matrix,
    similarity_from_relation,
)


def _random_S(rng, n):
    B = rng.random((n, n))
    return (B + B.T) / 2.0


def test_relation_symmetrizes_absolute_values():
    C = np.array([[0.0, -1.0], [0.5, 0.0]])
    g = similarity_from_relation(C)
    np.testing.assert_array_equal(g.S, [[0.0, 0.75], [0.75, 0.0]])
    np.testing.assert_array_equal(g.degrees, [0.75, 0.75])
    np.testing.assert_array_equal(g.L, [[0.75, -0.75], [-0.75, 0.75]])


def test_relation_rejects_nonzero_diagonal():
    with pytest.raises(ContractError, match="diagonal"):
        similarity_from_relation(np.eye(3))


def test_similarity_rejects_asymmetric_and_negative():
    with pytest.raises(ContractError):
        similarity_from_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ContractError):
        similarity_from_matrix(np.array([[0.0, -1.0], [-1.0, 0.0]]))


def test_zero_relation_gives_zero_laplacians():
    g = similarity_from_relation(np.zeros((4, 4)))
    np.testing.assert_array_equal(g.L, 0.0)
    np.testing.assert_array_equal(g.L_norm, 0.0)
    assert np.all(np.isfinite(g.L_norm))


def test_isolated_vertex_gets_zero_row():
    S = np.zeros((3, 3))
    S[0, 1] = S[1, 0] = 2.0
    g = similarity_from_matrix(S)
    np.testing.assert_array_equal(g.L_norm[2], 0.0)
    np.testing.assert_allclose(g.L_norm[:2, :2], [[1.0, -1.0], [-1.0, 1.0]])


def test_identity_small_example():
    X = np.array([[1.0, 0.0], [0.0, 1.0]])
    Xhat = np.zeros((2, 2))
    S = np.array([[0.0, 1.0], [1.0, 0.0]])
    lhs, rhs = locality_identity_check(X, Xhat, S)
    assert lhs == pytest.approx(2.0)
    assert rhs == pytest.approx(2.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_identity_property(d, n, seed):
    rng = np.random.default_rng(seed)
    X, Xhat = rng.standard_normal((d, n)), rng.standard_normal((d, n))
    lhs, rhs = locality_identity_check(X, Xhat, _random_S(rng, n))
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**32 - 1))
def test_normalized_laplacian_psd_symmetric(n, seed):
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((n, n))
    np.fill_diagonal(C, 0.0)
    g = similarity_from_relation(C)
    np.testing.assert_array_equal(g.L_norm, g.L_norm.T)
    assert np.linalg.eigvalsh(g.L_norm).min() > -1e-10


def test_locality_grad_matches_finite_differences():
    rng = np.random.default_rng(2)
    X, Xhat = rng.standard_normal((3, 5)), rng.standard_normal((3, 5))
    Ln = similarity_from_matrix(_random_S(rng, 5)).L_norm
    g = locality_grad(X, Xhat, Ln)
    eps = 1e-6
    for i in range(3):
        for j in range(5):
            P = Xhat.copy()
            P[i, j] += eps
            up = locality_loss(X, P, Ln)
            P[i, j] -= 2 * eps
            down = locality_loss(X, P, Ln)
            assert (up - down) / (2 * eps) == pytest.approx(g[i, j], rel=1e-6, abs=1e-8)


def test_locality_with_zero_laplacian_is_reconstruction():
    rng = np.random.default_rng(0)
    X, Xhat = rng.standard_normal((4, 6)), rng.standard_normal((4, 6))
    assert locality_loss(X, Xhat, np.zeros((6, 6))) == pytest.approx(np.sum((X - Xhat) ** 2))
