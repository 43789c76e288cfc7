"""Clustering accuracy (Hungarian matching), NMI and purity."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["ContingencyTable", "contingency", "accuracy", "nmi", "purity", "evaluate"]


@dataclass(frozen=True)
class ContingencyTable:
    """``counts[i, j]`` = samples with true class ``i`` and predicted cluster ``j``."""

    counts: np.ndarray
    true_labels: np.ndarray
    pred_labels: np.ndarray

    @property
    def n(self):
        return int(self.counts.sum())

    @property
    def row_sums(self):
        return self.counts.sum(axis=1)

    @property
    def col_sums(self):
        return self.counts.sum(axis=0)


def contingency(y_true, y_pred):
    y_true = np.asarray(y_true).ravel()
    y_pred = np.asarray(y_pred).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError(f"label vectors differ in length: {y_true.size} vs {y_pred.size}")
    if y_true.size == 0:
        raise ValueError("empty label vectors")
    t_vals, t_idx = np.unique(y_true, return_inverse=True)
    p_vals, p_idx = np.unique(y_pred, return_inverse=True)
    counts = np.zeros((t_vals.size, p_vals.size), dtype=np.int64)
    np.add.at(counts, (t_idx, p_idx), 1)
    return ContingencyTable(counts, t_vals, p_vals)


def accuracy(y_true, y_pred):
    """Fraction correct under the best one-to-one cluster-to-class map.

    The contingency table is zero-padded to square, so surplus clusters (or
    classes) simply stay unmatched.
    """
    table = contingency(y_true, y_pred)
    counts = table.counts
    size = max(counts.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: counts.shape[0], : counts.shape[1]] = counts
    rows, cols = linear_sum_assignment(padded.max() - padded)
    return float(padded[rows, cols].sum()) / table.n


def _entropy(p):
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def nmi(y_true, y_pred):
    """``I(Y; L) / sqrt(H(Y) H(L))`` with natural logarithms.

    When an entropy is zero the ratio is 0/0: two single-cluster partitions
    score 1, anything else scores 0.
    """
    table = contingency(y_true, y_pred)
    n = table.n
    h_true = _entropy(table.row_sums / n)
    h_pred = _entropy(table.col_sums / n)
    if h_true == 0.0 or h_pred == 0.0:
        return 1.0 if h_true == h_pred == 0.0 else 0.0
    P = table.counts / n
    outer = np.outer(table.row_sums / n, table.col_sums / n)
    nz = P > 0
    mi = float(np.sum(P[nz] * np.log(P[nz] / outer[nz])))
    return min(1.0, max(0.0, float(mi / np.sqrt(h_true * h_pred))))


def purity(y_true, y_pred):
    """Share of samples belonging to the majority class of their cluster."""
    table = contingency(y_true, y_pred)
    return float(table.counts.max(axis=0).sum()) / table.n


def evaluate(y_true, y_pred):
    return {"acc": accuracy(y_true, y_pred), "nmi": nmi(y_true, y_pred), "pur": purity(y_true, y_pred)}
