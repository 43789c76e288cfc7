"""Dense linear-algebra helpers and a finite-difference gradient checker.

All routines work in float64. Decompositions are delegated to LAPACK through
numpy; the wrappers add the sorting, sign and error conventions the rest of the
package relies on.
"""

import numpy as np

from .exceptions import ContractError, NumericalError

__all__ = ["as_matrix", "svd", "sym_eig", "grad_check", "make_rng", "check_finite"]


def make_rng(seed):
    """Return a numpy Generator; ``None`` seeds from entropy."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def as_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ContractError(f"{name} must be 2-D, got shape {M.shape}")
    return M


def check_finite(M, name="matrix"):
    if not np.all(np.isfinite(M)):
        raise NumericalError(f"{name} of shape {np.shape(M)} contains non-finite entries")
    return M


def svd(M):
    """Thin singular value decomposition ``M = U @ diag(s) @ V.T``.

    Returns
    -------
    U : ndarray of shape (rows, r)
    s : ndarray of shape (r,)
        Nonincreasing, nonnegative.
    V : ndarray of shape (cols, r)
        Right singular vectors as columns (not transposed).
    """
    M = check_finite(as_matrix(M), "svd input")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"SVD did not converge for {M.shape[0]}x{M.shape[1]} matrix"
        ) from exc
    return U, s, Vt.T


def _fix_signs(vectors):
    # Largest-magnitude component of each column made nonnegative; ties go to
    # the lowest index.
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eig(M, atol=1e-10):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Each eigenvector's largest-magnitude component is made nonnegative so the
    result is deterministic.

    Raises
    ------
    ContractError
        If ``M`` is not symmetric within ``atol * max(1, max|M|)``.
    """
    M = check_finite(as_matrix(M), "sym_eig input")
    if M.shape[0] != M.shape[1]:
        raise ContractError(f"sym_eig needs a square matrix, got {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if M.size and np.max(np.abs(M - M.T)) > atol * scale:
        raise ContractError("sym_eig input is not symmetric")
    try:
        w, v = np.linalg.eigh((M + M.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigendecomposition did not converge for {M.shape[0]}x{M.shape[1]} matrix"
        ) from exc
    order = np.argsort(-w, kind="stable")
    return w[order], _fix_signs(v[:, order])


def grad_check(fun, params, epsilon=1e-6, masks=None, max_coords=None, seed=0):
    """Compare analytic gradients against central differences.

    Parameters
    ----------
    fun : callable
        ``fun(params) -> (value, grads)`` where ``grads`` maps the same keys as
        ``params`` to arrays of matching shape.
    params : dict of str -> ndarray
        Perturbed in place and restored afterwards.
    epsilon : float
        Finite-difference step.
    masks : dict of str -> bool ndarray, optional
        Only coordinates where the mask is True are checked.
    max_coords : int, optional
        Sample at most this many coordinates per tensor.

    Returns
    -------
    float
        ``max |analytic - numeric| / max(1, |analytic|, |numeric|)``.
    """
    rng = np.random.default_rng(seed)
    _, grads = fun(params)
    grads = {k: np.array(g, dtype=np.float64) for k, g in grads.items()}
    worst = 0.0
    for name, P in params.items():
        flat = P.reshape(-1)
        coords = np.arange(flat.size)
        if masks is not None and name in masks:
            coords = coords[np.asarray(masks[name]).reshape(-1)]
        if max_coords is not None and coords.size > max_coords:
            coords = np.sort(rng.choice(coords, size=max_coords, replace=False))
        g = grads[name].reshape(-1)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + epsilon
            fp = fun(params)[0]
            flat[i] = orig - epsilon
            fm = fun(params)[0]
            flat[i] = orig
            numeric = (fp - fm) / (2.0 * epsilon)
            err = abs(g[i] - numeric) / max(1.0, abs(g[i]), abs(numeric))
            worst = max(worst, err)
    return worst
