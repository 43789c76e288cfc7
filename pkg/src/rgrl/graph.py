"""Similarity graphs built from a relation matrix, and the locality terms.

Samples are columns, so for ``X`` of shape (d, n) the weighted reconstruction

    sum_ij S_ij ||x_i - xhat_j||^2
        = Tr[(X - Xhat) D (X - Xhat)^T] + 2 sum_ij L_ij x_i^T xhat_j

where ``D`` is the degree matrix of the symmetric ``S`` and ``L = D - S``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError

__all__ = [
    "DEGREE_EPS",
    "SimilarityGraph",
    "similarity_from_relation",
    "similarity_from_matrix",
    "locality_identity_check",
    "locality_loss",
    "locality_grad",
]

DEGREE_EPS = 1e-8


@dataclass(frozen=True)
class SimilarityGraph:
    S: np.ndarray
    degrees: np.ndarray
    L: np.ndarray
    L_norm: np.ndarray

    @property
    def D(self):
        return np.diag(self.degrees)


def similarity_from_matrix(S):
    """Degree, Laplacian and symmetric-normalized Laplacian of a symmetric ``S``.

    Degrees below ``DEGREE_EPS`` are replaced by ``DEGREE_EPS`` in the
    normalization only, so an isolated vertex gets a zero row in ``L_norm``.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ContractError(f"similarity must be square, got {S.shape}")
    if not np.array_equal(S, S.T):
        raise ContractError("similarity matrix must be exactly symmetric")
    if np.any(S < 0):
        raise ContractError("similarity matrix must be nonnegative")
    deg = S.sum(axis=1)
    L = np.diag(deg) - S
    inv_sqrt = 1.0 / np.sqrt(np.maximum(deg, DEGREE_EPS))
    L_norm = inv_sqrt[:, None] * L * inv_sqrt[None, :]
    L_norm = (L_norm + L_norm.T) / 2.0
    return SimilarityGraph(S, deg, L, L_norm)


def similarity_from_relation(C):
    """Build ``S = (|C| + |C|^T) / 2`` and its Laplacians.

    Raises
    ------
    ContractError
        If ``C`` is not square or has a nonzero diagonal.
    """
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ContractError(f"relation matrix must be square, got {C.shape}")
    if np.any(np.diag(C) != 0):
        raise ContractError("relation matrix must have a zero diagonal")
    absC = np.abs(C)
    return similarity_from_matrix((absC + absC.T) / 2.0)


def _check_pair(X, Xhat):
    X = np.asarray(X, dtype=np.float64)
    Xhat = np.asarray(Xhat, dtype=np.float64)
    if X.shape != Xhat.shape or X.ndim != 2:
        raise ContractError(f"shape mismatch: X {X.shape} vs Xhat {Xhat.shape}")
    return X, Xhat


def locality_identity_check(X, Xhat, S):
    """Both sides of the weighted-reconstruction trace identity.

    Returns ``(lhs, rhs)`` where ``lhs`` is the direct pairwise sum and ``rhs``
    the trace form with the unnormalized Laplacian.
    """
    X, Xhat = _check_pair(X, Xhat)
    g = similarity_from_matrix(S)
    if g.S.shape[0] != X.shape[1]:
        raise ContractError(f"S is {g.S.shape} but there are {X.shape[1]} samples")
    sq_x = np.sum(X * X, axis=0)
    sq_h = np.sum(Xhat * Xhat, axis=0)
    dist = sq_x[:, None] - 2.0 * (X.T @ Xhat) + sq_h[None, :]
    lhs = float(np.sum(g.S * dist))
    R = X - Xhat
    rhs = float(np.sum(g.degrees * np.sum(R * R, axis=0)) + 2.0 * np.sum(X * (Xhat @ g.L)))
    return lhs, rhs


def locality_loss(X, Xhat, L_norm):
    """``||X - Xhat||_F^2 + 2 sum_ij L_norm[i, j] x_i^T xhat_j``."""
    X, Xhat = _check_pair(X, Xhat)
    L_norm = np.asarray(L_norm, dtype=np.float64)
    if L_norm.shape != (X.shape[1], X.shape[1]):
        raise ContractError(f"L_norm is {L_norm.shape} but there are {X.shape[1]} samples")
    R = X - Xhat
    return float(np.sum(R * R) + 2.0 * np.sum(X * (Xhat @ L_norm)))


def locality_grad(X, Xhat, L_norm):
    """Gradient of :func:`locality_loss` with respect to ``Xhat`` (``L_norm`` symmetric)."""
    return -2.0 * (X - Xhat) + 2.0 * (X @ L_norm)
