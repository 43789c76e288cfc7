"""Dataset container, file formats and small preprocessing utilities.

Data matrices are stored column-per-sample: ``X`` has shape ``(d, n)``.

Binary matrix format (``.rgm``)::

    b"RGM1" | u32 rows | u32 cols | rows*cols float64, row-major, little-endian
"""

import math
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DataFormatError

__all__ = [
    "Dataset",
    "read_matrix",
    "write_matrix",
    "read_matrix_from",
    "write_matrix_to",
    "read_labels",
    "write_labels",
    "load_dense",
    "minmax_scale",
    "tfidf_vectorize",
    "subsample",
    "make_subspaces",
]

MAGIC = b"RGM1"
_HEADER = struct.Struct("<4sII")


@dataclass(frozen=True)
class Dataset:
    """A column-per-sample data matrix with optional labels.

    Attributes
    ----------
    X : ndarray of shape (d, n)
    labels : ndarray of shape (n,) or None
    sample_shape : tuple (height, width, channels) or None
        Set for image data; its product equals ``d``.
    name : str
    meta : dict
        Free-form provenance, e.g. synthetic generator parameters.
    """

    X: np.ndarray
    labels: np.ndarray = None
    sample_shape: tuple = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise DataFormatError(f"X must be 2-D (d, n), got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DataFormatError("X contains non-finite entries")
        object.__setattr__(self, "X", X)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (X.shape[1],):
                raise DataFormatError(
                    f"{labels.size} labels for {X.shape[1]} samples"
                )
            object.__setattr__(self, "labels", labels)
        if self.sample_shape is not None:
            shape = tuple(int(s) for s in self.sample_shape)
            if math.prod(shape) != X.shape[0]:
                raise DataFormatError(
                    f"sample_shape {shape} does not match feature dimension {X.shape[0]}"
                )
            object.__setattr__(self, "sample_shape", shape)

    @property
    def n_samples(self):
        return self.X.shape[1]

    @property
    def n_features(self):
        return self.X.shape[0]

    @property
    def n_classes(self):
        return 0 if self.labels is None else int(self.labels.max()) + 1

    def take(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        labels = None if self.labels is None else self.labels[indices]
        return Dataset(self.X[:, indices], labels, self.sample_shape, self.name, dict(self.meta))


# -- binary matrix format ---------------------------------------------------

def write_matrix_to(fh, M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise DataFormatError(f"only 2-D matrices can be written, got shape {M.shape}")
    fh.write(_HEADER.pack(MAGIC, M.shape[0], M.shape[1]))
    fh.write(np.ascontiguousarray(M, dtype="<f8").tobytes())


def read_matrix_from(fh, check_finite=True):
    head = fh.read(_HEADER.size)
    if len(head) != _HEADER.size:
        raise DataFormatError("truncated matrix header")
    magic, rows, cols = _HEADER.unpack(head)
    if magic != MAGIC:
        raise DataFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    nbytes = rows * cols * 8
    payload = fh.read(nbytes)
    if len(payload) != nbytes:
        raise DataFormatError(
            f"header declares {rows}x{cols} matrix ({nbytes} bytes) "
            f"but payload has {len(payload)} bytes"
        )
    M = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(rows, cols)
    if check_finite and not np.all(np.isfinite(M)):
        r, c = np.argwhere(~np.isfinite(M))[0]
        raise DataFormatError(f"non-finite entry at row {r}, column {c}")
    return M


def write_matrix(path, M):
    with open(path, "wb") as fh:
        write_matrix_to(fh, M)


def read_matrix(path):
    with open(path, "rb") as fh:
        M = read_matrix_from(fh)
        if fh.read(1):
            raise DataFormatError(f"{path}: trailing bytes after matrix payload")
    return M


# -- labels and csv -----------------------------------------------------------

def read_labels(path):
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                value = int(line)
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: not an integer label: {line!r}") from None
            if value < 0:
                raise DataFormatError(f"{path}:{lineno}: negative label {value}")
            labels.append(value)
    return np.asarray(labels, dtype=np.int64)


def write_labels(path, labels):
    with open(path, "w") as fh:
        for v in np.asarray(labels, dtype=np.int64):
            fh.write(f"{int(v)}\n")


def _read_csv(path):
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError:
                raise DataFormatError(f"{path}: unparsable value on row {lineno}") from None
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DataFormatError(f"{path}: row {i} has {len(r)} columns, expected {width}")
    A = np.asarray(rows, dtype=np.float64)
    bad = np.argwhere(~np.isfinite(A))
    if bad.size:
        raise DataFormatError(f"{path}: non-finite entry at row {bad[0][0]}, column {bad[0][1]}")
    return A.T


def minmax_scale(X, per_feature=False):
    """Scale to ``[0, 1]``; a zero range maps to 0 instead of NaN.

    ``per_feature=False`` uses the global min and max (the right choice for
    raw pixel intensities); otherwise each row of ``X`` is scaled on its own.
    """
    X = np.asarray(X, dtype=np.float64)
    if per_feature:
        lo = X.min(axis=1, keepdims=True)
        span = X.max(axis=1, keepdims=True) - lo
    else:
        lo = X.min()
        span = X.max() - lo
    # constant features have X == lo, so a unit span sends them to 0
    span = np.where(span > 0, span, 1.0)
    return (X - lo) / span


def load_dense(path, format=None, labels=None, sample_shape=None, normalize=False, name=None):
    """Load a dataset from a binary matrix file or a CSV file.

    Parameters
    ----------
    path : str or Path
    format : {"rgm1", "csv"}, optional
        Inferred from the suffix when omitted (``.csv`` -> csv, otherwise rgm1).
        The binary file stores ``X`` as (d, n); the CSV stores one sample per row.
    labels : str or Path, optional
        Label file with one integer per line.
    normalize : bool
        Apply global min-max scaling (raw pixel sources).
    """
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "rgm1"
    format = format.lower()
    if format == "rgm1":
        X = read_matrix(path)
    elif format == "csv":
        X = _read_csv(path)
    else:
        raise DataFormatError(f"unknown format tag {format!r}")
    if normalize:
        X = minmax_scale(X)
    y = read_labels(labels) if labels is not None else None
    return Dataset(X, y, sample_shape, name or path.stem)


# -- text ---------------------------------------------------------------------

def tfidf_vectorize(documents, vocab_size):
    """Tf-idf weights for the ``vocab_size`` highest-scoring terms.

    ``tf = count / document length`` and ``idf = ln(N / df)``. A term's score is
    its largest weight over all documents; ties are broken alphabetically.

    Returns
    -------
    X : ndarray of shape (min(vocab_size, n_terms), n_documents)
    vocab : list of str
        Row order of ``X``.
    """
    if vocab_size < 1:
        raise ValueError("vocab_size must be at least 1")
    documents = [list(doc) for doc in documents]
    if not any(documents):
        raise ValueError("empty corpus: no document contains any token")
    N = len(documents)
    counts = [Counter(doc) for doc in documents]
    df = Counter()
    for c in counts:
        df.update(c.keys())
    terms = sorted(df)
    index = {t: i for i, t in enumerate(terms)}
    W = np.zeros((len(terms), N))
    for j, (doc, c) in enumerate(zip(documents, counts)):
        for t, cnt in c.items():
            W[index[t], j] = cnt / len(doc)
    idf = np.log(N / np.array([df[t] for t in terms], dtype=np.float64))
    W *= idf[:, None]
    score = W.max(axis=1)
    order = sorted(range(len(terms)), key=lambda i: (-score[i], terms[i]))[:vocab_size]
    return W[order], [terms[i] for i in order]


# -- sampling -----------------------------------------------------------------

def subsample(ds, per_class=None, total=None, seed=0):
    """Subset a dataset.

    ``per_class`` keeps the first ``per_class`` samples of every class in source
    order. ``total`` draws a seeded random subset, returned in source order.
    """
    if (per_class is None) == (total is None):
        raise ValueError("give exactly one of per_class or total")
    if per_class is not None:
        if ds.labels is None:
            raise ValueError("per_class subsampling needs labels")
        keep = []
        for c in np.unique(ds.labels):
            idx = np.flatnonzero(ds.labels == c)
            if idx.size < per_class:
                raise ValueError(f"class {c} has {idx.size} samples, {per_class} requested")
            keep.append(idx[:per_class])
        indices = np.sort(np.concatenate(keep))
    else:
        if total > ds.n_samples:
            raise ValueError(f"requested {total} samples from {ds.n_samples}")
        rng = np.random.default_rng(seed)
        indices = np.sort(rng.choice(ds.n_samples, size=total, replace=False))
    return ds.take(indices)


def make_subspaces(n_subspaces=3, dim=2, ambient=20, per_subspace=30, noise=0.0, seed=0):
    """Sample points from a union of random linear subspaces.

    Each subspace gets a random orthonormal basis ``U`` (ambient x dim); points
    are ``U @ v`` with coefficient vectors ``v`` uniform on the unit sphere, so
    clean points have unit norm. Gaussian noise of standard deviation ``noise``
    is added afterwards. Samples are grouped by subspace.
    """
    rng = np.random.default_rng(seed)
    n = n_subspaces * per_subspace
    X = np.empty((ambient, n))
    labels = np.repeat(np.arange(n_subspaces), per_subspace)
    bases = []
    for i in range(n_subspaces):
        U, _ = np.linalg.qr(rng.standard_normal((ambient, dim)))
        V = rng.standard_normal((dim, per_subspace))
        V /= np.linalg.norm(V, axis=0)
        X[:, i * per_subspace:(i + 1) * per_subspace] = U @ V
        bases.append(U)
    if noise > 0:
        X += noise * rng.standard_normal(X.shape)
    meta = dict(
        generator="union_of_subspaces",
        n_subspaces=n_subspaces,
        dim=dim,
        ambient=ambient,
        per_subspace=per_subspace,
        noise=noise,
        seed=seed,
    )
    return Dataset(X, labels, None, "subspaces", meta)
