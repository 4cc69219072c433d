"""Small dense linear-algebra kernel.

Everything here is a pure function on numpy arrays. Sizes in this package
are modest (p <= a few hundred), so dense storage is used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError, SingularSystemError

# Relative pivot floor for the Cholesky factorization. A pivot below
# _PIVOT_RTOL * max(diag(A)) is treated as a rank deficiency.
_PIVOT_RTOL = 1e-12


def _as_matrix(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise InvalidArgumentError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return A


def _as_vector(v, name="v"):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise InvalidArgumentError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return v


def matvec(A, v):
    """Return ``A @ v`` after checking shapes and finiteness."""
    A = _as_matrix(A)
    v = _as_vector(v)
    if A.shape[1] != v.shape[0]:
        raise InvalidArgumentError(
            f"dimension mismatch: A has {A.shape[1]} columns, v has length {v.shape[0]}"
        )
    return A @ v


def cholesky(A):
    """Lower-triangular Cholesky factor of a symmetric positive-definite matrix.

    Raises :class:`SingularSystemError` naming the first pivot that is not
    safely positive.
    """
    A = _as_matrix(A)
    m = A.shape[0]
    if A.shape[1] != m:
        raise InvalidArgumentError(f"matrix must be square, got shape {A.shape}")
    floor = _PIVOT_RTOL * max(float(np.max(np.abs(np.diag(A)))), np.finfo(float).tiny)
    L = np.zeros_like(A)
    for k in range(m):
        row = L[k, :k]
        d = A[k, k] - row @ row
        if not d > floor:
            raise SingularSystemError(
                f"matrix is not positive definite: pivot {k} is {d:.3e}", pivot=k
            )
        L[k, k] = np.sqrt(d)
        if k + 1 < m:
            L[k + 1:, k] = (A[k + 1:, k] - L[k + 1:, :k] @ row) / L[k, k]
    return L


def _forward(L, b):
    x = np.empty_like(b)
    for i in range(L.shape[0]):
        x[i] = (b[i] - L[i, :i] @ x[:i]) / L[i, i]
    return x


def _backward_t(L, b):
    # solves L^T x = b
    m = L.shape[0]
    x = np.empty_like(b)
    for i in range(m - 1, -1, -1):
        x[i] = (b[i] - L[i + 1:, i] @ x[i + 1:]) / L[i, i]
    return x


def cholesky_solve(L, b):
    """Solve ``L L^T x = b`` given the lower Cholesky factor ``L``."""
    return _backward_t(L, _forward(L, np.asarray(b, dtype=float)))


def triangular_solve_lower(L, B):
    """Solve ``L X = B`` for lower-triangular ``L``; ``B`` may be 1-D or 2-D."""
    return _forward(L, np.asarray(B, dtype=float))


def spd_solve(A, b):
    """Solve ``A x = b`` for symmetric positive-definite ``A`` via Cholesky."""
    A = _as_matrix(A)
    b = _as_vector(b, "b")
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise InvalidArgumentError(
            f"dimension mismatch: A is {A.shape}, b has length {b.shape[0]}"
        )
    return cholesky_solve(cholesky(A), b)


@dataclass(frozen=True)
class Means:
    """Column means (and optional scales) removed by :func:`center_columns`."""

    x_mean: np.ndarray
    y_mean: float
    x_scale: np.ndarray | None = None

    def restore(self, X, y):
        X = np.asarray(X, dtype=float)
        if self.x_scale is not None:
            X = X * self.x_scale
        return X + self.x_mean, np.asarray(y, dtype=float) + self.y_mean


def center_columns(X, y):
    """Center the columns of ``X`` and the response ``y``.

    Returns the centered copies and a :class:`Means` record.
    """
    X = _as_matrix(X, "X")
    y = _as_vector(y, "y")
    if X.shape[0] != y.shape[0]:
        raise InvalidArgumentError(
            f"X has {X.shape[0]} rows but y has length {y.shape[0]}"
        )
    if X.shape[0] < 2:
        raise InvalidArgumentError("at least 2 rows are required to center")
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    return X - x_mean, y - y_mean, Means(x_mean=x_mean, y_mean=y_mean)
