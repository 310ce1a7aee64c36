"""Scalar summaries of step-wise evaluation results.

Class-incremental runs are summarized by the average of per-step
accuracies and the accuracy after the final step.  Domain-incremental runs
produce an accuracy matrix r[i][j] (accuracy on domain j after observing
domain i) from which five transfer metrics are derived:

    in_domain   = mean of r[i][i]
    next_domain = mean of r[i][i+1]
    backward    = mean of r[i][j] over all j <  i
    forward     = mean of r[i][j] over all j >  i
    overall     = mean of every entry

Everything is computed in double precision from exact inputs.
"""

from __future__ import annotations

import numpy as np

from .errors import InvariantViolation, MatrixTooSmall


def _check_series(series) -> np.ndarray:
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvariantViolation("accuracy series must be a non-empty 1-D sequence")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise InvariantViolation("accuracies must lie in [0, 1]")
    return arr


def avg_accuracy(series) -> float:
    """Arithmetic mean of the per-step accuracies."""
    return float(_check_series(series).mean())


def last_accuracy(series) -> float:
    """Accuracy after the final step."""
    return float(_check_series(series)[-1])


def _check_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvariantViolation(f"accuracy matrix must be square, got {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise InvariantViolation("accuracies must lie in [0, 1]")
    return arr


def domain_metrics(m) -> dict[str, float]:
    """The five transfer metrics of an N x N accuracy matrix, N >= 2."""
    arr = _check_matrix(m)
    n = arr.shape[0]
    if n < 2:
        raise MatrixTooSmall("next/backward/forward need at least a 2x2 matrix")
    lower = np.tril_indices(n, k=-1)
    upper = np.triu_indices(n, k=1)
    return {
        "overall": float(arr.mean()),
        "in_domain": float(arr.diagonal().mean()),
        "next_domain": float(arr.diagonal(offset=1).mean()),
        "backward": float(arr[lower].mean()),
        "forward": float(arr[upper].mean()),
    }
