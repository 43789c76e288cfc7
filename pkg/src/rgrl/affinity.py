"""Affinity matrix from a learned relation matrix.

``S = (|C| + |C|^T)/2`` is factored as ``U diag(s) V^T``; the rows of
``U_m diag(s_m)^{1/2}`` with ``m = k * d_sub + 1`` are unit-normalized and
``A = |Z Z^T| ** rho`` entrywise.
"""

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ConfigError, ContractError
from .numerics import svd

__all__ = ["AffinityConfig", "DegenerateAffinityWarning", "build_affinity", "write_pgm"]


class DegenerateAffinityWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class AffinityConfig:
    k: int
    d_sub: int = 3
    rho: float = 1.0

    def __post_init__(self):
        if self.k < 2:
            raise ConfigError("k must be at least 2")
        if self.d_sub < 1:
            raise ConfigError("d_sub must be at least 1")
        if not self.rho > 0:
            raise ConfigError("rho must be positive")

    @property
    def rank(self):
        return self.k * self.d_sub + 1

    def to_dict(self):
        return asdict(self)


def build_affinity(C, cfg):
    """Return the ``n x n`` affinity matrix for relation matrix ``C``.

    The result is exactly symmetric with entries in ``[0, 1]``.

    Raises
    ------
    ConfigError
        If ``k * d_sub + 1`` exceeds ``n``.
    """
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ContractError(f"relation matrix must be square, got {C.shape}")
    n = C.shape[0]
    m = cfg.rank
    if m > n:
        raise ConfigError(f"k * d_sub + 1 = {m} exceeds the number of samples {n}")
    absC = np.abs(C)
    S = (absC + absC.T) / 2.0
    U, s, _ = svd(S)
    Z = U[:, :m] * np.sqrt(s[:m])
    norms = np.linalg.norm(Z, axis=1)
    Z = Z / np.where(norms > 0, norms, 1.0)[:, None]
    G = np.abs(Z @ Z.T)
    G = np.clip((G + G.T) / 2.0, 0.0, 1.0)
    A = G ** cfg.rho
    if np.max(A, initial=0.0) < 1e-12:
        warnings.warn("affinity matrix is numerically zero", DegenerateAffinityWarning, stacklevel=2)
    return A


def write_pgm(path, A):
    """Save ``A`` as an 8-bit binary PGM, scaled so the max entry is 255."""
    A = np.asarray(A, dtype=np.float64)
    top = A.max() if A.size else 0.0
    img = np.zeros(A.shape, dtype=np.uint8) if top <= 0 else np.round(255.0 * A / top).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{A.shape[1]} {A.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
