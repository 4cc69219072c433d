"""Performance metrics for coefficient samples.

Covers estimation/prediction error, selection probabilities, percentile
intervals and coverage, ecdf distances, the strong irrepresentable
condition, and Kolmogorov-Smirnov normality summaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .exceptions import InvalidArgumentError
from .linalg import cholesky, spd_solve, triangular_solve_lower
from .model import ZERO_TOL, SupportSet, gram_blocks

IRREPRESENTABLE_SLACK = 1e-10
TV_STEP = 0.001


def _draws(batch):
    return np.atleast_2d(np.asarray(getattr(batch, "draws", batch), dtype=float))


def _sum_sq_residuals(draws, X, y):
    R = y[None, :] - draws @ X.T
    return np.einsum("bi,bi->b", R, R)


def batch_mse(batch, data):
    """Average over draws of ``||y - X beta_b||^2`` on the training data."""
    draws = _draws(batch)
    if draws.shape[1] != data.p:
        raise InvalidArgumentError("draws and data disagree on p")
    return float(np.mean(_sum_sq_residuals(draws, data.X, data.y)))


def batch_mspe(batch, test):
    """Same as :func:`batch_mse`, evaluated on a held-out dataset."""
    return batch_mse(batch, test)


def selection_probabilities(batch):
    """Fraction of draws in which each coefficient is nonzero."""
    draws = _draws(batch)
    return np.mean(np.abs(draws) > ZERO_TOL, axis=0)


def credible_interval(batch, level=0.90):
    """Percentile interval per coordinate: ``(low, high, width)``.

    Quantiles use linear interpolation between order statistics (numpy's
    default), e.g. the 5% point of 1..100 is 5.95.
    """
    if not 0 < level < 1:
        raise InvalidArgumentError("level must be in (0, 1)")
    draws = _draws(batch)
    if draws.shape[0] < 2:
        raise InvalidArgumentError("need at least 2 draws for an interval")
    alpha = (1.0 - level) / 2.0
    low, high = np.quantile(draws, [alpha, 1.0 - alpha], axis=0, method="linear")
    return low, high, high - low


def coverage(ci_low, ci_high, beta0):
    beta0 = np.asarray(beta0, dtype=float)
    return (ci_low <= beta0) & (beta0 <= ci_high)


# --- ecdf and distances -----------------------------------------------------

class Ecdf:
    """Right-continuous empirical distribution function of a sample."""

    def __init__(self, points):
        pts = np.sort(np.asarray(points, dtype=float).ravel())
        if pts.size == 0:
            raise InvalidArgumentError("ecdf needs at least one point")
        self.sorted_points = pts

    @property
    def n_points(self):
        return self.sorted_points.size

    def __call__(self, t):
        return np.searchsorted(self.sorted_points, t, side="right") / self.n_points


def _as_ecdf(a):
    return a if isinstance(a, Ecdf) else Ecdf(a)


def tv_distance(a, b, lo=None, hi=None, step=TV_STEP):
    """Half the trapezoid-rule integral of ``|F_a - F_b|`` on a uniform grid.

    This follows the convention of comparing ecdfs through their L1 distance;
    it is not the measure-theoretic total variation. By default the grid
    spans the pooled sample range padded by one step on each side.
    """
    a, b = _as_ecdf(a), _as_ecdf(b)
    if not step > 0:
        raise InvalidArgumentError("step must be positive")
    pooled_lo = min(a.sorted_points[0], b.sorted_points[0])
    pooled_hi = max(a.sorted_points[-1], b.sorted_points[-1])
    lo = pooled_lo - step if lo is None else float(lo)
    hi = pooled_hi + step if hi is None else float(hi)
    if not lo < hi:
        raise InvalidArgumentError("lo must be below hi")
    m = int(np.ceil((hi - lo) / step - 1e-9))
    grid = lo + step * np.arange(m + 1)
    diff = np.abs(a(grid) - b(grid))
    return 0.5 * float(np.trapezoid(diff, dx=step))


def tv_per_variable(draws, reference, step=TV_STEP):
    draws = _draws(draws)
    reference = _draws(reference)
    if draws.shape[1] != reference.shape[1]:
        raise InvalidArgumentError("batches disagree on p")
    return np.array([tv_distance(draws[:, j], reference[:, j], step=step) for j in range(draws.shape[1])])


# --- strong irrepresentable condition --------------------------------------

@dataclass(frozen=True)
class IrrepresentableReport:
    lhs: np.ndarray
    eta_margin: np.ndarray
    satisfied: bool
    eta_star: float

    def to_dict(self):
        return {
            "lhs": self.lhs.tolist(),
            "eta_margin": self.eta_margin.tolist(),
            "satisfied": self.satisfied,
            "eta_star": self.eta_star,
        }


def irrepresentable_from_blocks(C11, C21, sign, slack=IRREPRESENTABLE_SLACK):
    """``|C21 C11^{-1} sign|`` against 1, with a small slack for round-off."""
    v = spd_solve(C11, np.asarray(sign, dtype=float))
    lhs = np.abs(C21 @ v)
    margin = 1.0 - lhs
    eta_star = float(margin.min()) if margin.size else 1.0
    return IrrepresentableReport(
        lhs=lhs, eta_margin=margin, satisfied=bool(np.all(lhs <= 1.0 - slack)), eta_star=eta_star
    )


def _check_true_model(true_model, p):
    q = true_model.q
    if q < 1 or q >= p:
        raise InvalidArgumentError(f"need 1 <= q < p, got q={q}, p={p}")
    return true_model.support, np.sign(true_model.beta0[list(true_model.support)])


def check_irrepresentable(data, true_model, slack=IRREPRESENTABLE_SLACK):
    """Strong irrepresentable condition on the realized Gram blocks of ``data``."""
    support, sign = _check_true_model(true_model, data.p)
    C11, C21 = gram_blocks(data, support)
    return irrepresentable_from_blocks(C11, C21, sign, slack)


def check_irrepresentable_cov(cov, true_model, slack=IRREPRESENTABLE_SLACK):
    """Same check with a population covariance in place of ``X'X/n``."""
    cov = np.asarray(cov, dtype=float)
    support, sign = _check_true_model(true_model, cov.shape[0])
    inside = list(support)
    outside = list(support.complement(cov.shape[0]))
    return irrepresentable_from_blocks(cov[np.ix_(inside, inside)], cov[np.ix_(outside, inside)], sign, slack)


# --- normality --------------------------------------------------------------

@dataclass(frozen=True)
class NormalityResult:
    ks_stat: float
    ks_per_coord: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    B: int

    def passes(self, alpha=0.01):
        """Every coordinate inside the asymptotic KS acceptance band."""
        return bool(self.ks_stat < ks_critical(self.B, alpha))


def ks_critical(B, alpha=0.01):
    """Asymptotic one-sample KS critical value ``c(alpha) / sqrt(B)``."""
    return float(stats.kstwobign.isf(alpha)) / np.sqrt(B)


def normality_check(batch, center, support, target_cov, n):
    """Whitened KS summary of ``sqrt(n) (draws - center)`` on ``support``.

    The scaled draws are whitened by the inverse Cholesky factor of
    ``target_cov`` and each coordinate is compared with N(0, 1). Returns
    the largest per-coordinate KS statistic along with per-coordinate
    means and variances.
    """
    draws = _draws(batch)
    if not isinstance(support, SupportSet):
        support = SupportSet(tuple(support))
    idx = list(support)
    center = np.asarray(center, dtype=float)
    if center.shape[0] == draws.shape[1]:
        center = center[idx]
    L = cholesky(np.asarray(target_cov, dtype=float))
    Z = np.sqrt(n) * (draws[:, idx] - center[None, :])
    W = triangular_solve_lower(L, Z.T).T
    ks = np.array([stats.kstest(W[:, k], "norm").statistic for k in range(W.shape[1])])
    return NormalityResult(
        ks_stat=float(ks.max()), ks_per_coord=ks, mean=W.mean(axis=0),
        var=W.var(axis=0, ddof=1), B=draws.shape[0],
    )


# --- report -----------------------------------------------------------------

@dataclass
class DiagnosticsReport:
    mse: float
    select_prob: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    ci_width: np.ndarray
    level: float = 0.90
    mspe: float | None = None
    covered: np.ndarray | None = None
    tv_per_var: np.ndarray | None = None

    @property
    def tv_mean(self):
        return None if self.tv_per_var is None else float(np.mean(self.tv_per_var))

    def scalar_metrics(self):
        out = {"mse": self.mse}
        if self.mspe is not None:
            out["mspe"] = self.mspe
        if self.tv_per_var is not None:
            out["tv_mean"] = self.tv_mean
        return out

    def per_variable(self):
        """Mapping of metric name to a length-p array."""
        out = {
            "select_prob": self.select_prob,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "ci_width": self.ci_width,
        }
        if self.covered is not None:
            out["covered"] = self.covered.astype(float)
        if self.tv_per_var is not None:
            out["tv"] = self.tv_per_var
        return out

    def to_dict(self):
        d = {"level": self.level, **self.scalar_metrics()}
        d.update({k: np.asarray(v).tolist() for k, v in self.per_variable().items()})
        return d


def diagnose(batch, data, test=None, beta0=None, reference=None, level=0.90, tv_step=TV_STEP):
    """Compute every applicable metric for ``batch``."""
    low, high, width = credible_interval(batch, level)
    return DiagnosticsReport(
        mse=batch_mse(batch, data),
        mspe=None if test is None else batch_mspe(batch, test),
        select_prob=selection_probabilities(batch),
        ci_low=low,
        ci_high=high,
        ci_width=width,
        level=level,
        covered=None if beta0 is None else coverage(low, high, beta0),
        tv_per_var=None if reference is None else tv_per_variable(batch, reference, tv_step),
    )
