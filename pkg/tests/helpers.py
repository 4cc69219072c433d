"""Small dataset builders shared by the tests."""

from __future__ import annotations

import numpy as np

from rwlasso.model import Dataset


def make_data(n=40, p=6, seed=0, beta=None, noise=1.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.r_[2.0, -1.5, 1.0, np.zeros(p - 3)] if beta is None else np.asarray(beta, float)
    y = X @ beta + noise * rng.standard_normal(n)
    return Dataset.from_raw(X, y)


def orthonormal_data(n, p, seed=0, beta=None, noise=1.0):
    """Centered design with ``X'X = I``."""
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, p))
    Z -= Z.mean(axis=0)
    Q, _ = np.linalg.qr(Z)
    beta = np.zeros(p) if beta is None else np.asarray(beta, float)
    y = Q @ beta + noise * rng.standard_normal(n)
    y -= y.mean()
    return Dataset(Q - Q.mean(axis=0), y)
