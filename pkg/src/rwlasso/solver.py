"""Weighted LASSO by coordinate descent, weighted least-squares refits and KKT checks.

.. note:: Penalty scaling.

   The objective minimised here is

       sum_i W_i (y_i - x_i' beta)^2 + lam * sum_j W0_j |beta_j|

   with **no** factor 1/2 (or 1/n) on the loss. The soft-threshold level of a
   coordinate update is therefore ``lam * W0_j / 2``, and the smallest
   ``lam`` giving an all-zero solution is ``max_j |2 x_j' D y| / W0_j``.
   scikit-learn's ``Lasso(alpha)`` minimises ``(1/2n)||y - Xb||^2 + alpha ||b||_1``,
   which corresponds to ``lam = 2 * n * alpha`` here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _cd
from .exceptions import InvalidArgumentError
from .linalg import cholesky, cholesky_solve
from .model import SupportSet
from .weights import WeightDraw


class CoordinateOrder(enum.Enum):
    CYCLIC = "cyclic"
    RANDOMIZED = "randomized"


@dataclass(frozen=True)
class SolverConfig:
    """Coordinate-descent settings.

    ``kkt_tol`` bounds the KKT residual (scaled by 1/n) at convergence.
    """

    kkt_tol: float = 1e-8
    max_sweeps: int = 100_000
    coordinate_order: CoordinateOrder = CoordinateOrder.CYCLIC
    order_seed: int = 0

    def __post_init__(self):
        if not self.kkt_tol > 0:
            raise InvalidArgumentError("kkt_tol must be positive")
        if self.max_sweeps < 1:
            raise InvalidArgumentError("max_sweeps must be at least 1")
        object.__setattr__(self, "coordinate_order", CoordinateOrder(self.coordinate_order))


@dataclass(frozen=True)
class LassoFit:
    beta: np.ndarray
    lam: float
    active: SupportSet
    kkt_residual: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class WeightedProblem:
    """Sufficient statistics of one weighted objective: ``G = X'DX``, ``c = X'Dy``."""

    G: np.ndarray
    c: np.ndarray
    yDy: float
    w_pen: np.ndarray
    n: int

    @classmethod
    def build(cls, X, y, w_obs=None, w_pen=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if w_obs is None:
            Xw, yw = X, y
        else:
            Xw = X * w_obs[:, None]
            yw = y * w_obs
        G = np.ascontiguousarray(X.T @ Xw)
        c = X.T @ yw
        w_pen = np.ones(X.shape[1]) if w_pen is None else np.asarray(w_pen, dtype=float)
        return cls(G=G, c=c, yDy=float(y @ yw), w_pen=w_pen, n=X.shape[0])

    def lambda_max(self):
        return float(np.max(np.abs(2.0 * self.c) / self.w_pen))

    def solve(self, lam, cfg=None, beta0=None, history=None):
        """Run coordinate descent; returns ``(beta, sweeps, converged)``."""
        cfg = cfg or SolverConfig()
        beta = np.zeros_like(self.c) if beta0 is None else np.array(beta0, dtype=float)
        pen = lam * self.w_pen
        seed = -1 if cfg.coordinate_order is CoordinateOrder.CYCLIC else int(cfg.order_seed) % (2**31)
        hist = np.empty(0) if history is None else history
        tol = cfg.kkt_tol * self.n
        sweeps, converged = _cd.coordinate_descent(
            self.G, self.c, pen, beta, tol, cfg.max_sweeps, seed, hist, self.yDy
        )
        return beta, int(sweeps), bool(converged)


def _check_inputs(data, w):
    if w.w_obs.shape != (data.n,) or w.w_pen.shape != (data.p,):
        raise InvalidArgumentError(
            f"weight dimensions {w.w_obs.shape}/{w.w_pen.shape} do not match data n={data.n}, p={data.p}"
        )
    if not (np.all(np.isfinite(w.w_obs)) and np.all(np.isfinite(w.w_pen))):
        raise InvalidArgumentError("weights contain non-finite values")


def kkt_certificate(data, w, lam, beta):
    """Maximum violation of the weighted-LASSO optimality conditions, divided by n.

    For active ``j`` the stationarity condition is
    ``2 x_j' D (y - X beta) = lam * W0_j * sgn(beta_j)``; for inactive ``j``
    it is ``|2 x_j' D (y - X beta)| <= lam * W0_j``.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.p,):
        raise InvalidArgumentError(f"beta has shape {beta.shape}, expected ({data.p},)")
    _check_inputs(data, w)
    r = data.y - data.X @ beta
    g2 = 2.0 * (data.X.T @ (w.w_obs * r))
    pen = lam * w.w_pen
    viol = np.where(
        beta > 0, np.abs(g2 - pen),
        np.where(beta < 0, np.abs(g2 + pen), np.maximum(np.abs(g2) - pen, 0.0)),
    )
    return float(np.max(viol)) / data.n


def solve_weighted_lasso(data, w, lam, cfg=None, beta0=None):
    """Minimise the randomly weighted LASSO objective for one weight draw.

    Starts from zero unless ``beta0`` is given. Non-convergence is reported
    through ``converged=False`` rather than raised.
    """
    cfg = cfg or SolverConfig()
    if not (np.isfinite(lam) and lam >= 0):
        raise InvalidArgumentError(f"lambda must be finite and non-negative, got {lam}")
    _check_inputs(data, w)
    problem = WeightedProblem.build(data.X, data.y, w.w_obs, w.w_pen)
    beta, sweeps, _ = problem.solve(lam, cfg, beta0)
    kkt = kkt_certificate(data, w, lam, beta)
    # The kernel stops on a covariance-form residual; tighten if the
    # residual-form certificate disagrees.
    tighter = cfg
    for _ in range(3):
        if kkt <= cfg.kkt_tol or sweeps >= cfg.max_sweeps:
            break
        tighter = SolverConfig(tighter.kkt_tol / 10, cfg.max_sweeps - sweeps, cfg.coordinate_order, cfg.order_seed)
        beta, extra, _ = problem.solve(lam, tighter, beta)
        sweeps += extra
        kkt = kkt_certificate(data, w, lam, beta)
    return LassoFit(
        beta=beta,
        lam=float(lam),
        active=SupportSet.from_beta(beta),
        kkt_residual=kkt,
        iterations=sweeps,
        converged=kkt <= cfg.kkt_tol,
    )


def weighted_ls(X, y, w_obs, columns):
    """Weighted least squares on ``columns``; returns the full-length vector."""
    cols = list(columns)
    beta = np.zeros(X.shape[1])
    Xs = X[:, cols]
    Xw = Xs * w_obs[:, None] if w_obs is not None else Xs
    L = cholesky(Xs.T @ Xw)
    beta[cols] = cholesky_solve(L, Xw.T @ y)
    return beta


def weighted_ls_refit(data, w, support):
    """Weighted least-squares refit on ``support`` with exact zeros elsewhere.

    Raises :class:`~rwlasso.exceptions.SingularSystemError` when the
    weighted Gram matrix of the support columns is singular.
    """
    if not isinstance(support, SupportSet):
        support = SupportSet(tuple(support), p=data.p)
    if len(support) == 0:
        raise InvalidArgumentError("support must be nonempty for a least-squares refit")
    _check_inputs(data, w)
    return weighted_ls(data.X, data.y, w.w_obs, support.indices)


def lasso(data, lam, cfg=None):
    """Unweighted LASSO fit (all weights equal to one)."""
    return solve_weighted_lasso(data, WeightDraw.unit(data.n, data.p), lam, cfg)


def lambda_max(data, w=None):
    """Smallest lambda for which the zero vector is optimal."""
    if w is None:
        return float(np.max(np.abs(2.0 * data.X.T @ data.y)))
    return float(np.max(np.abs(2.0 * data.X.T @ (w.w_obs * data.y)) / w.w_pen))
