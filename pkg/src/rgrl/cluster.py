"""Normalized spectral clustering and the k-means routine behind it."""

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError
from .graph import DEGREE_EPS
from .numerics import sym_eig

__all__ = ["ClusterAssignment", "kmeans", "kmeans_plusplus", "spectral_cluster", "spectral_embedding"]


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    k: int
    inertia: float
    degenerate: bool = False


def _sq_dist(P, centers):
    d = (P * P).sum(1)[:, None] - 2.0 * P @ centers.T + (centers * centers).sum(1)[None, :]
    return np.maximum(d, 0.0)


def kmeans_plusplus(P, k, rng):
    n = P.shape[0]
    centers = np.empty((k, P.shape[1]))
    centers[0] = P[rng.integers(n)]
    closest = _sq_dist(P, centers[:1])[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = rng.choice(n, p=closest / total)
        else:
            idx = rng.integers(n)
        centers[c] = P[idx]
        closest = np.minimum(closest, _sq_dist(P, centers[c:c + 1])[:, 0])
    return centers


def _lloyd(P, centers, max_iter):
    k = centers.shape[0]
    labels = None
    for _ in range(max_iter):
        d = _sq_dist(P, centers)
        new = np.argmin(d, axis=1)
        if labels is not None:
            # keep the current cluster on ties so repairs cannot oscillate
            rows = np.arange(P.shape[0])
            keep = d[rows, labels] <= d[rows, new]
            new = np.where(keep, labels, new)
        counts = np.bincount(new, minlength=k)
        for c in np.flatnonzero(counts == 0):
            # refill an empty cluster with the worst-fit point of a shared cluster
            own = d[np.arange(P.shape[0]), new]
            movable = counts[new] > 1
            if not movable.any():
                break
            far = int(np.argmax(np.where(movable, own, -1.0)))
            counts[new[far]] -= 1
            new[far] = c
            counts[c] = 1
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = P[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    inertia = float(np.sum((P - centers[labels]) ** 2))
    return labels, centers, inertia


def kmeans(points, k, seed=0, restarts=20, max_iter=300):
    """k-means++ seeded Lloyd iterations, best of ``restarts`` runs.

    Parameters
    ----------
    points : ndarray of shape (n, dim)
    k : int
        Must not exceed ``n``.

    Returns
    -------
    ClusterAssignment
        The lowest-inertia run; ties go to the earliest restart.
    """
    P = np.asarray(points, dtype=np.float64)
    if P.ndim != 2:
        raise ContractError(f"points must be 2-D, got shape {P.shape}")
    n = P.shape[0]
    if not 1 <= k <= n:
        raise ContractError(f"need 1 <= k <= n, got k={k}, n={n}")
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        labels, _, inertia = _lloyd(P, kmeans_plusplus(P, k, rng), max_iter)
        if best is None or inertia < best.inertia:
            best = ClusterAssignment(labels, k, inertia)
    best.degenerate = bool(np.any(np.bincount(best.labels, minlength=k) == 0))
    return best


def spectral_embedding(A, k):
    """Row-normalized top-``k`` eigenvectors of ``D^{-1/2} A D^{-1/2}``.

    Returns the embedding and the full descending spectrum.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractError(f"affinity must be square, got {A.shape}")
    if np.any(A < 0):
        raise ContractError("affinity must be nonnegative")
    deg = np.maximum(A.sum(axis=1), DEGREE_EPS)
    inv_sqrt = 1.0 / np.sqrt(deg)
    M = inv_sqrt[:, None] * A * inv_sqrt[None, :]
    w, V = sym_eig((M + M.T) / 2.0)
    E = V[:, :k]
    norms = np.linalg.norm(E, axis=1)
    # zero rows stay at the origin and are placed by nearest centroid
    E = E / np.where(norms > 0, norms, 1.0)[:, None]
    return E, w


def spectral_cluster(A, k, seed=0, restarts=20):
    """Normalized spectral clustering of a symmetric nonnegative affinity.

    ``degenerate`` is set when a cluster is empty or the k-th and (k+1)-th
    eigenvalues tie, i.e. the embedding is not determined by ``A``.
    """
    if k < 2:
        raise ContractError("k must be at least 2")
    A = np.asarray(A, dtype=np.float64)
    if not np.allclose(A, A.T, rtol=0, atol=1e-10 * max(1.0, float(np.abs(A).max(initial=0)))):
        raise ContractError("affinity must be symmetric")
    if k > A.shape[0]:
        raise ContractError(f"k={k} exceeds the number of samples {A.shape[0]}")
    E, w = spectral_embedding(A, k)
    result = kmeans(E, k, seed=seed, restarts=restarts)
    if k < len(w) and abs(w[k - 1] - w[k]) <= 1e-10 * max(1.0, abs(w[0])):
        result.degenerate = True
    return result
