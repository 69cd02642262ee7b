"""Numeric hot kernels with numba-jitted and pure-numpy implementations.

The jitted path is the default whenever numba imports; set the environment
variable ``TABTEXT_NUMBA=0`` before import to force the numpy fallback (used
by the benchmark and as an escape hatch on platforms where numba misbehaves).
Both paths compute the same quantities; tests run the numpy path's results
against independent oracles and the benchmark compares the two directly.
"""
from __future__ import annotations

import os

import numpy as np

_WANT_NUMBA = os.environ.get("TABTEXT_NUMBA", "1") not in ("0", "false", "no")

try:
    if not _WANT_NUMBA:
        raise ImportError
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def _weighted_sum_np(vectors: np.ndarray, weights: np.ndarray) -> np.ndarray:
    out = np.zeros(vectors.shape[1], dtype=np.float64)
    for i in range(vectors.shape[0]):
        out += weights[i] * vectors[i]
    return out


def _logistic_gd_np(
    X: np.ndarray, y: np.ndarray, steps: int, lr: float, l2: float
) -> tuple[np.ndarray, float]:
    n, d = X.shape
    w = np.zeros(d, dtype=np.float64)
    b = 0.0
    for _ in range(steps):
        z = X @ w + b
        p = 1.0 / (1.0 + np.exp(-z))
        r = p - y
        grad_w = X.T @ r / n + l2 * w
        grad_b = np.sum(r) / n
        w -= lr * grad_w
        b -= lr * grad_b
    return w, b


if HAS_NUMBA:

    @njit(cache=True)
    def _weighted_sum_nb(vectors, weights):  # pragma: no cover - jitted
        n, d = vectors.shape
        out = np.zeros(d, dtype=np.float64)
        for i in range(n):
            w = weights[i]
            for j in range(d):
                out[j] += w * vectors[i, j]
        return out

    @njit(cache=True)
    def _logistic_gd_nb(X, y, steps, lr, l2):  # pragma: no cover - jitted
        n, d = X.shape
        w = np.zeros(d, dtype=np.float64)
        b = 0.0
        for _ in range(steps):
            z = X @ w + b
            p = 1.0 / (1.0 + np.exp(-z))
            r = p - y
            grad_w = X.T @ r / n + l2 * w
            grad_b = np.sum(r) / n
            w -= lr * grad_w
            b -= lr * grad_b
        return w, b

    weighted_sum = _weighted_sum_nb
    logistic_gd = _logistic_gd_nb
else:
    weighted_sum = _weighted_sum_np
    logistic_gd = _logistic_gd_np
