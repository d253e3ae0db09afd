"""Numeric kernels for frame retrieval and bundle validation.

The compiled variants use numba when it is importable; setting
FRAMEAGENT_NO_NUMBA=1 forces the plain numpy implementations. Both paths
resolve score ties to the lowest frame index.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_DISABLED = os.environ.get("FRAMEAGENT_NO_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
}

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled via FRAMEAGENT_NO_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def argmax_dot_numpy(emb: np.ndarray, query: np.ndarray, lo: int, hi: int) -> int:
    """Absolute row index in [lo, hi) whose dot product with query is largest.

    np.argmax keeps the first maximum, so exact ties resolve to the lowest row.
    """
    scores = emb[lo:hi].astype(np.float64) @ query
    return lo + int(np.argmax(scores))


def row_norms_numpy(emb: np.ndarray) -> np.ndarray:
    return np.sqrt((emb.astype(np.float64) ** 2).sum(axis=1))


if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _argmax_dot_jit(emb, query, lo, hi):
        best = lo
        best_score = -np.inf
        for i in range(lo, hi):
            s = 0.0
            for j in range(emb.shape[1]):
                s += emb[i, j] * query[j]
            if s > best_score:
                best_score = s
                best = i
        return best

    @njit(cache=True, nogil=True)
    def _row_norms_jit(emb):
        out = np.empty(emb.shape[0], dtype=np.float64)
        for i in range(emb.shape[0]):
            s = 0.0
            for j in range(emb.shape[1]):
                s += emb[i, j] * emb[i, j]
            out[i] = np.sqrt(s)
        return out


def argmax_dot(emb: np.ndarray, query: np.ndarray, lo: int, hi: int) -> int:
    if hi <= lo:
        raise ValueError(f"empty row range [{lo}, {hi})")
    if HAS_NUMBA:
        return int(_argmax_dot_jit(emb, query, lo, hi))
    return argmax_dot_numpy(emb, query, lo, hi)


def row_norms(emb: np.ndarray) -> np.ndarray:
    if HAS_NUMBA:
        return _row_norms_jit(emb)
    return row_norms_numpy(emb)
