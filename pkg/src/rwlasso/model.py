"""Regression data containers, true-model descriptions and support sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidArgumentError
from .linalg import Means, center_columns

# |beta_j| above this counts as selected. Coordinate descent produces exact
# zeros, so this only guards against round-off.
ZERO_TOL = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Centered design ``X`` (n x p) and centered response ``y``.

    Build one with :meth:`from_raw` unless the inputs are already centered.
    """

    X: np.ndarray
    y: np.ndarray
    means: Means | None = None
    feature_names: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or y.ndim != 1:
            raise InvalidArgumentError("X must be 2-D and y 1-D")
        if X.shape[0] != y.shape[0]:
            raise InvalidArgumentError(f"X has {X.shape[0]} rows, y has {y.shape[0]}")
        if X.shape[0] < 2 or X.shape[1] < 1:
            raise InvalidArgumentError("need n >= 2 and p >= 1")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidArgumentError("X and y must be finite")
        scale = max(1.0, float(np.max(np.abs(X))))
        if np.max(np.abs(X.mean(axis=0))) > 1e-10 * scale:
            raise InvalidArgumentError("columns of X are not centered")
        if abs(y.mean()) > 1e-10 * max(1.0, float(np.max(np.abs(y)))):
            raise InvalidArgumentError("y is not centered")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.feature_names is not None:
            names = tuple(str(v) for v in self.feature_names)
            if len(names) != X.shape[1]:
                raise InvalidArgumentError(f"{len(names)} feature names for {X.shape[1]} columns")
            object.__setattr__(self, "feature_names", names)

    @classmethod
    def from_raw(cls, X, y, standardize=False, feature_names=None):
        """Center (and optionally scale to unit variance) raw inputs."""
        Xc, yc, means = center_columns(X, y)
        if standardize:
            sd = Xc.std(axis=0)
            if np.any(sd == 0):
                bad = int(np.flatnonzero(sd == 0)[0])
                raise InvalidArgumentError(f"column {bad} has zero variance")
            Xc = Xc / sd
            means = Means(x_mean=means.x_mean, y_mean=means.y_mean, x_scale=sd)
        return cls(Xc, yc, means, feature_names)

    def to_original_scale(self, beta):
        """Map coefficients for the centered design back to raw columns.

        Returns ``(intercept, coef)``; ``beta`` may be 1-D or a stack of rows.
        """
        beta = np.asarray(beta, dtype=float)
        if self.means is None:
            return np.zeros(beta.shape[:-1]) if beta.ndim > 1 else 0.0, beta
        coef = beta if self.means.x_scale is None else beta / self.means.x_scale
        intercept = self.means.y_mean - coef @ self.means.x_mean
        return intercept, coef

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def names(self):
        return self.feature_names or tuple(f"x{j + 1}" for j in range(self.p))

    def subset(self, rows):
        """Rows ``rows`` of this dataset, re-centered."""
        return Dataset.from_raw(self.X[rows], self.y[rows], feature_names=self.feature_names)


@dataclass(frozen=True)
class SupportSet:
    """Sorted, duplicate-free 0-based column indices."""

    indices: tuple = ()
    p: int | None = None

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if list(idx) != sorted(set(idx)):
            raise InvalidArgumentError(f"support indices must be sorted and unique: {idx}")
        if idx and idx[0] < 0:
            raise InvalidArgumentError("support indices must be non-negative")
        if self.p is not None and idx and idx[-1] >= self.p:
            raise InvalidArgumentError(f"support index {idx[-1]} out of range for p={self.p}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_beta(cls, beta, tol=ZERO_TOL):
        beta = np.asarray(beta)
        return cls(tuple(np.flatnonzero(np.abs(beta) > tol)), p=beta.shape[0])

    @classmethod
    def from_one_based(cls, indices, p=None):
        return cls(tuple(sorted(int(i) - 1 for i in indices)), p=p)

    def one_based(self):
        return tuple(i + 1 for i in self.indices)

    def complement(self, p):
        keep = set(self.indices)
        return SupportSet(tuple(j for j in range(p) if j not in keep), p=p)

    def mask(self, p):
        m = np.zeros(p, dtype=bool)
        m[list(self.indices)] = True
        return m

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, j):
        return j in self.indices


@dataclass(frozen=True)
class TrueModel:
    """Generative coefficients and error variance for a simulated dataset."""

    beta0: np.ndarray
    sigma_eps: float = 1.0
    support: SupportSet = field(init=False)

    def __post_init__(self):
        beta0 = np.asarray(self.beta0, dtype=float)
        if beta0.ndim != 1:
            raise InvalidArgumentError("beta0 must be 1-D")
        if not self.sigma_eps > 0:
            raise InvalidArgumentError("sigma_eps must be positive")
        object.__setattr__(self, "beta0", beta0)
        object.__setattr__(self, "support", SupportSet(tuple(np.flatnonzero(beta0 != 0)), p=beta0.shape[0]))

    @property
    def q(self):
        return len(self.support)


def sign_match(beta_hat, beta0):
    """True when ``sgn(beta_hat) == sgn(beta0)`` entrywise (zeros included)."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    if beta_hat.shape != beta0.shape:
        raise InvalidArgumentError(f"length mismatch: {beta_hat.shape} vs {beta0.shape}")
    s_hat = np.where(np.abs(beta_hat) > ZERO_TOL, np.sign(beta_hat), 0.0)
    s0 = np.where(np.abs(beta0) > ZERO_TOL, np.sign(beta0), 0.0)
    return bool(np.array_equal(s_hat, s0))


def gram_blocks(data, support):
    """Partitioned Gram blocks ``(C11, C21)`` of ``X'X / n`` for ``support``.

    ``C11`` covers the support columns; ``C21`` has one row per column outside
    the support (zero rows when the support is full).
    """
    if not isinstance(support, SupportSet):
        support = SupportSet(tuple(support), p=data.p)
    if len(support) == 0:
        raise InvalidArgumentError("support must be nonempty")
    inside = list(support.indices)
    outside = list(support.complement(data.p).indices)
    X1 = data.X[:, inside]
    X2 = data.X[:, outside]
    n = data.n
    return X1.T @ X1 / n, X2.T @ X1 / n
