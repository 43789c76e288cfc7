import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgrl.exceptions import ContractError
from rgrl.numerics import grad_check, svd, sym_eig


def test_svd_identity():
    _, s, _ = svd(np.eye(3))
    np.testing.assert_array_equal(s, [1.0, 1.0, 1.0])


def test_svd_diagonal():
    _, s, _ = svd(np.diag([3.0, 2.0, 1.0]))
    np.testing.assert_allclose(s, [3.0, 2.0, 1.0], atol=1e-15)


def test_svd_random_orthogonality_and_reconstruction():
    M = np.random.default_rng(0).standard_normal((6, 4))
    U, s, V = svd(M)
    np.testing.assert_allclose(U.T @ U, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(V.T @ V, np.eye(4), atol=1e-12)
    assert np.linalg.norm(U @ np.diag(s) @ V.T - M) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 64), st.integers(1, 64), st.integers(0, 2**32 - 1))
def test_svd_round_trip_property(rows, cols, seed):
    M = np.random.default_rng(seed).standard_normal((rows, cols))
    U, s, V = svd(M)
    assert np.linalg.norm(U * s @ V.T - M) <= 1e-8 * np.linalg.norm(M)
    assert np.all(s >= 0)
    assert np.all(np.diff(s) <= 0)


def test_svd_rejects_nonfinite():
    with pytest.raises(Exception):
        svd(np.array([[1.0, np.nan]]))


def test_sym_eig_diagonal():
    w, v = sym_eig(np.array([[2.0, 0.0], [0.0, 1.0]]))
    np.testing.assert_allclose(w, [2.0, 1.0])
    np.testing.assert_allclose(v[:, 0], [1.0, 0.0])


def test_sym_eig_swap():
    w, v = sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(w, [1.0, -1.0], atol=1e-15)


def test_sym_eig_sign_convention():
    M = np.random.default_rng(3).standard_normal((8, 8))
    _, v = sym_eig(M + M.T)
    idx = np.argmax(np.abs(v), axis=0)
    assert np.all(v[idx, np.arange(8)] >= 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 32), st.integers(0, 2**32 - 1))
def test_sym_eig_residual_property(n, seed):
    B = np.random.default_rng(seed).standard_normal((n, n))
    M = B + B.T
    w, v = sym_eig(M)
    scale = np.linalg.norm(M, 2)
    assert np.all(np.diff(w) <= 0)
    for i in range(n):
        assert np.linalg.norm(M @ v[:, i] - w[i] * v[:, i]) <= 1e-8 * max(scale, 1.0)


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(ContractError):
        sym_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_grad_check_quadratic():
    P = {"P": np.random.default_rng(0).standard_normal((3, 4))}

    def f(params):
        return float(np.sum(params["P"] ** 2)), {"P": 2.0 * params["P"]}

    assert grad_check(f, P, epsilon=1e-5) < 1e-9


def test_grad_check_linear_at_zero():
    a = np.arange(6.0).reshape(2, 3)
    P = {"P": np.zeros((2, 3))}

    def f(params):
        return float(np.sum(a * params["P"])), {"P": a.copy()}

    assert grad_check(f, P, epsilon=1e-4) < 1e-10
    np.testing.assert_array_equal(P["P"], 0.0)


def test_grad_check_detects_wrong_gradient():
    P = {"P": np.ones((2, 2))}

    def f(params):
        return float(np.sum(params["P"] ** 2)), {"P": params["P"].copy()}

    assert grad_check(f, P, epsilon=1e-5) > 0.1
