"""Matrix-calculus operators: vec, vech, diag, commutation and duplication matrices.

Index conventions
-----------------
The documented formulas are 1-based: ``vec`` stores ``T[i, j]`` at
``k = (j - 1) n + i`` and ``vech`` stores ``T[i, j]`` (``i >= j``) at
``k = (j - 1) n - j (j - 1) / 2 + i``.  Internally everything is 0-based, so
the same entries live at ``k - 1``.  Both reads are column-major.
"""
from functools import lru_cache

import numpy as np


def vec_of(T):
    """Column-major stacking of a square matrix into a vector of length n**2."""
    T = _square(T)
    return T.reshape(-1, order="F").copy()


def vec_inv(v, n):
    """Inverse of :func:`vec_of` for an n-by-n matrix."""
    v = np.asarray(v)
    return v.reshape((n, n), order="F").copy()


def vech_index(i, j, n):
    """0-based position of entry (i, j), i >= j, inside ``vech`` of an n-by-n matrix."""
    if i < j:
        i, j = j, i
    # 1-based k = (j-1)n - j(j-1)/2 + i, shifted to 0-based indices on both sides
    return j * n - j * (j + 1) // 2 + i


@lru_cache(maxsize=None)
def _vech_rows_cols(n):
    rows, cols = np.tril_indices(n)
    # tril_indices is row-major; vech reads down columns
    order = np.lexsort((rows, cols))
    rows, cols = rows[order], cols[order]
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def vech_of(T):
    """Lower triangle (diagonal included) of a square matrix, read down its columns."""
    T = _square(T)
    rows, cols = _vech_rows_cols(T.shape[0])
    return T[rows, cols].copy()


def vech_inv(v, n):
    """Symmetric matrix whose ``vech`` is ``v``.  Works on stacked vectors (..., p)."""
    v = np.asarray(v)
    rows, cols = _vech_rows_cols(n)
    out = np.zeros(v.shape[:-1] + (n, n), dtype=v.dtype)
    out[..., rows, cols] = v
    out[..., cols, rows] = v
    return out


def diag_of(T):
    """Main diagonal of a square matrix."""
    return np.diag(_square(T)).copy()


def diag_inv(v):
    """Diagonal matrix with ``v`` on its diagonal."""
    return np.diag(np.asarray(v, dtype=float).ravel())


def commutation_matrix(n):
    """The n**2 x n**2 permutation C_n with ``C_n @ vec(T) == vec(T.T)``."""
    _check_dim(n)
    C = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            # vec(T.T) at position of (j, i) picks T[i, j]
            C[j + i * n, i + j * n] = 1.0
    return C


def duplication_matrix(n):
    """The n**2 x n(n+1)/2 matrix D_n with ``D_n @ vech(S) == vec(S)`` for symmetric S."""
    _check_dim(n)
    D = np.zeros((n * n, n * (n + 1) // 2))
    for j in range(n):
        for i in range(n):
            D[i + j * n, vech_index(i, j, n)] = 1.0
    return D


def dup_pinv(n):
    """Moore-Penrose inverse of the duplication matrix, built entrywise.

    Diagonal entries map straight through; each off-diagonal vech
    coordinate averages its two copies in vec, hence the weights of 1/2.
    """
    _check_dim(n)
    Dp = np.zeros((n * (n + 1) // 2, n * n))
    for j in range(n):
        for i in range(n):
            Dp[vech_index(i, j, n), i + j * n] = 1.0 if i == j else 0.5
    return Dp


def _check_dim(n):
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")


def _square(T):
    T = np.asarray(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {T.shape}")
    return T
