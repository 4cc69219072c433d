"""Random-weighting samplers, the residual-bootstrap baseline and lambda selection.

All samplers take a single ``lam`` for the whole batch. Draw ``b`` depends
only on ``(data, lam, seed, b)``, so batches are identical for any number of
workers.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import InvalidArgumentError, SingularSystemError
from .model import SupportSet
from .solver import SolverConfig, WeightedProblem, lasso, solve_weighted_lasso, weighted_ls, weighted_ls_refit
from .weights import DEFAULT_DISTRIBUTION, WeightDistribution, WeightScheme, draw_weights, stream

_RB_STREAM_TAG = 0x5242
_CV_STREAM_TAG = 0x4356


class Procedure(enum.Enum):
    ONE_STEP = "one-step"
    TWO_STEP = "two-step"
    RESIDUAL_BOOTSTRAP = "residual-bootstrap"


@dataclass
class SampleBatch:
    """``B`` coefficient draws with their selected sets and provenance.

    ``failures`` lists ``(draw_index, message)`` for draws that did not
    converge or needed a fallback; the draws themselves are still stored.
    """

    draws: np.ndarray
    selected: list
    procedure: Procedure
    lam: float
    master_seed: int
    scheme: WeightScheme | None = None
    dist: WeightDistribution | None = None
    kkt_residuals: np.ndarray | None = None
    converged: np.ndarray | None = None
    failures: list = field(default_factory=list)
    kkt_tol: float = 1e-8

    @property
    def B(self):
        return self.draws.shape[0]

    @property
    def p(self):
        return self.draws.shape[1]

    def manifest(self):
        from . import __version__

        return {
            "procedure": self.procedure.value,
            "lambda": self.lam,
            "seed": int(self.master_seed),
            "scheme": None if self.scheme is None else self.scheme.value,
            "distribution": None if self.dist is None else self.dist.to_dict(),
            "B": int(self.B),
            "p": int(self.p),
            "kkt_tol": self.kkt_tol,
            "n_failures": len(self.failures),
            "failures": [[int(b), msg] for b, msg in self.failures],
            "software_version": __version__,
        }


def resolve_workers(workers=None):
    if workers is None:
        env = os.environ.get("RW_LASSO_WORKERS")
        workers = int(env) if env else 1
    return max(1, int(workers))


def _map_draws(fn, B, workers):
    workers = resolve_workers(workers)
    if workers == 1 or B == 1:
        return [fn(b) for b in range(B)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(B)))


def _check_common(lam, B):
    if not (np.isfinite(lam) and lam >= 0):
        raise InvalidArgumentError(f"lambda must be finite and non-negative, got {lam}")
    if int(B) < 1:
        raise InvalidArgumentError("B must be at least 1")


def _assemble(results, procedure, lam, seed, scheme, dist, cfg):
    draws = np.vstack([r[0] for r in results])
    selected = [r[1] for r in results]
    failures = [(b, r[4]) for b, r in enumerate(results) if r[4]]
    return SampleBatch(
        draws=draws,
        selected=selected,
        procedure=procedure,
        lam=float(lam),
        master_seed=int(seed),
        scheme=scheme,
        dist=dist,
        kkt_residuals=np.array([r[2] for r in results]),
        converged=np.array([r[3] for r in results], dtype=bool),
        failures=failures,
        kkt_tol=cfg.kkt_tol,
    )


def one_step_sample(data, lam, B, dist=DEFAULT_DISTRIBUTION, scheme=WeightScheme.OBS_ONLY,
                    seed=0, cfg=None, workers=None):
    """Draw ``B`` minimisers of the randomly weighted LASSO objective."""
    cfg = cfg or SolverConfig()
    scheme = WeightScheme.parse(scheme)
    _check_common(lam, B)

    def one(b):
        w = draw_weights(dist, scheme, data.n, data.p, seed, b)
        fit = solve_weighted_lasso(data, w, lam, cfg)
        note = "" if fit.converged else f"not converged (kkt={fit.kkt_residual:.3e})"
        return fit.beta, fit.active, fit.kkt_residual, fit.converged, note

    return _assemble(_map_draws(one, int(B), workers), Procedure.ONE_STEP, lam, seed, scheme, dist, cfg)


def two_step_sample(data, lam, B, dist=DEFAULT_DISTRIBUTION, scheme=WeightScheme.OBS_ONLY,
                    seed=0, cfg=None, workers=None):
    """Weighted LASSO selection followed by a weighted least-squares refit, ``B`` times.

    An empty selection yields the zero vector. A singular refit is retried
    once with fresh weights; if that also fails the step-one LASSO solution
    is stored and the draw is flagged.
    """
    cfg = cfg or SolverConfig()
    scheme = WeightScheme.parse(scheme)
    _check_common(lam, B)

    def one(b):
        notes = []
        for attempt in (0, 1):
            w = draw_weights(dist, scheme, data.n, data.p, seed, b, attempt=attempt)
            fit = solve_weighted_lasso(data, w, lam, cfg)
            if not fit.converged:
                notes.append(f"selection not converged (kkt={fit.kkt_residual:.3e})")
            if len(fit.active) == 0:
                return np.zeros(data.p), fit.active, fit.kkt_residual, fit.converged, "; ".join(notes)
            try:
                beta = weighted_ls_refit(data, w, fit.active)
            except SingularSystemError as exc:
                notes.append(f"attempt {attempt}: singular refit ({exc})")
                continue
            return beta, fit.active, fit.kkt_residual, fit.converged, "; ".join(notes)
        notes.append("stored step-one LASSO solution")
        return fit.beta, fit.active, fit.kkt_residual, fit.converged, "; ".join(notes)

    return _assemble(_map_draws(one, int(B), workers), Procedure.TWO_STEP, lam, seed, scheme, dist, cfg)


def residual_bootstrap(data, lam, B, seed=0, cfg=None, workers=None, resampler=None):
    """Residual bootstrap around the LASSO fit at a fixed ``lam``.

    Residuals of the original fit are centered and resampled with
    replacement; each pseudo-response ``X beta_hat + e*`` (re-centered) is
    refit at the same ``lam``. ``resampler(rng, n)`` overrides the index
    draw and exists for testing.
    """
    cfg = cfg or SolverConfig()
    _check_common(lam, B)
    base = lasso(data, lam, cfg)
    fitted = data.X @ base.beta
    resid = data.y - fitted
    resid = resid - resid.mean()
    pen = np.full(data.p, float(lam))
    base_problem = WeightedProblem.build(data.X, data.y)

    def one(b):
        rng = stream(seed, _RB_STREAM_TAG, b)
        idx = resampler(rng, data.n) if resampler is not None else rng.integers(0, data.n, data.n)
        y_star = fitted + resid[idx]
        y_star = y_star - y_star.mean()
        problem = replace(base_problem, c=data.X.T @ y_star, yDy=float(y_star @ y_star))
        beta, _, _ = problem.solve(lam, cfg)
        g2 = 2.0 * (data.X.T @ (y_star - data.X @ beta))
        kkt = _kkt_from_grad(g2, pen, beta) / data.n
        ok = kkt <= cfg.kkt_tol
        note = "" if ok else f"not converged (kkt={kkt:.3e})"
        return beta, SupportSet.from_beta(beta), kkt, ok, note

    return _assemble(_map_draws(one, int(B), workers), Procedure.RESIDUAL_BOOTSTRAP, lam, seed, None, None, cfg)


def _kkt_from_grad(g2, pen, beta):
    viol = np.where(
        beta > 0, np.abs(g2 - pen),
        np.where(beta < 0, np.abs(g2 + pen), np.maximum(np.abs(g2) - pen, 0.0)),
    )
    return float(np.max(viol))


def lasso_ls(data, lam, cfg=None):
    """Unweighted LASSO selection followed by least squares on the selected set.

    Returns ``(beta, support)``; an empty selection gives the zero vector.
    """
    fit = lasso(data, lam, cfg)
    if len(fit.active) == 0:
        return np.zeros(data.p), fit.active
    return weighted_ls(data.X, data.y, None, fit.active.indices), fit.active


# --- cross-validation -------------------------------------------------------

class CvMode(enum.Enum):
    ONE_STEP = "one-step"
    TWO_STEP = "two-step"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "-")
        if key in ("one-step", "onestep", "onesteplasso", "lasso"):
            return cls.ONE_STEP
        if key in ("two-step", "twostep", "twosteplassols", "lasso+ls", "lasso-ls"):
            return cls.TWO_STEP
        raise InvalidArgumentError(f"unknown CV mode {value!r}")


@dataclass
class CvResult:
    lambda_grid: np.ndarray
    cv_error: np.ndarray
    chosen_lambda: float
    folds: int
    mode: CvMode
    fold_ids: np.ndarray
    fallbacks: list = field(default_factory=list)

    def to_dict(self):
        return {
            "mode": self.mode.value,
            "folds": self.folds,
            "chosen_lambda": self.chosen_lambda,
            "lambda_grid": self.lambda_grid.tolist(),
            "cv_error": self.cv_error.tolist(),
            "fallbacks": [[int(f), float(lam)] for f, lam in self.fallbacks],
        }


def default_lambda_grid(data, n_lambdas=100, ratio=1e-3):
    """Log-spaced grid from the null-model lambda down to ``ratio`` times it."""
    lmax = float(np.max(np.abs(2.0 * data.X.T @ data.y)))
    if lmax <= 0:
        lmax = 1.0
    return np.geomspace(lmax, ratio * lmax, n_lambdas)


def fold_assignment(n, folds, seed):
    """Balanced fold labels from a seeded shuffle."""
    perm = stream(seed, _CV_STREAM_TAG).permutation(n)
    ids = np.empty(n, dtype=int)
    ids[perm] = np.arange(n) % folds
    return ids


def _fold_errors(data, train, test, grid, mode, cfg):
    """Held-out SSE per grid point, null-fit flags, and fallback lambdas."""
    Xtr, ytr = data.X[train], data.y[train]
    xm, ym = Xtr.mean(axis=0), ytr.mean()
    Xtr = Xtr - xm
    ytr = ytr - ym
    Xte = data.X[test] - xm
    yte = data.y[test] - ym
    problem = WeightedProblem.build(Xtr, ytr)
    beta = np.zeros(data.p)
    sse = np.empty(grid.shape[0])
    null = np.empty(grid.shape[0], dtype=bool)
    fallbacks = []
    refits = {}
    for k, lam in enumerate(grid):
        beta, _, _ = problem.solve(lam, cfg, beta)
        coef = beta
        null[k] = not np.any(beta)
        if mode is CvMode.TWO_STEP:
            support = tuple(np.flatnonzero(np.abs(beta) > 1e-12))
            if support:
                if support not in refits:
                    try:
                        refits[support] = weighted_ls(Xtr, ytr, None, support)
                    except SingularSystemError:
                        refits[support] = None
                coef = refits[support]
                if coef is None:
                    coef = beta
                    fallbacks.append(float(lam))
        resid = yte - Xte @ coef
        sse[k] = resid @ resid
    return sse, null, fallbacks


def _break_tie(cv_error, null_fit, rule):
    """Index of the chosen grid point among those with minimal CV error.

    ``"stable"`` takes the middle of the contiguous tied block containing the
    largest minimising lambda, except that a block of all-null fits (which
    extends without bound above the grid) resolves to its largest lambda.
    """
    tied = np.flatnonzero(cv_error == cv_error.min())
    first = int(tied[0])  # grid descends, so this is the largest lambda
    if rule == "largest":
        return first
    if rule == "smallest":
        return int(tied[-1])
    if rule not in ("center", "stable"):
        raise InvalidArgumentError(f"unknown tie_break rule {rule!r}")
    end = first
    while end + 1 < cv_error.size and cv_error[end + 1] == cv_error[first]:
        end += 1
    if rule == "stable" and null_fit[first]:
        return first
    return (first + end) // 2


def cross_validate(data, folds=10, grid=None, mode=CvMode.TWO_STEP, seed=0, cfg=None, workers=None,
                   tie_break="stable"):
    """K-fold cross-validation of lambda for the LASSO or the LASSO+LS pipeline.

    The error at each grid point is the pooled mean squared held-out error.
    Exact ties are common in two-step mode, because every lambda that
    selects the same set in every fold gives an identical refit; see
    :func:`_break_tie` for the ``tie_break`` rules. In two-step mode a singular refit in a fold
    falls back to the LASSO prediction for that fold and is listed in
    ``fallbacks``.
    """
    cfg = cfg or SolverConfig()
    mode = CvMode.parse(mode)
    if folds < 2 or folds > data.n:
        raise InvalidArgumentError(f"folds must be in [2, n], got {folds}")
    grid = default_lambda_grid(data) if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidArgumentError("lambda grid must be a nonempty 1-D sequence")
    if np.any(grid <= 0) or np.any(np.diff(grid) >= 0):
        raise InvalidArgumentError("lambda grid must be positive and strictly descending")
    ids = fold_assignment(data.n, folds, seed)

    def one(f):
        return _fold_errors(data, ids != f, ids == f, grid, mode, cfg)

    results = _map_draws(one, folds, workers)
    total = np.zeros(grid.shape[0])
    null_fit = np.ones(grid.shape[0], dtype=bool)
    fallbacks = []
    for f, (sse, null, fb) in enumerate(results):
        total += sse
        null_fit &= null
        fallbacks.extend((f, lam) for lam in fb)
    cv_error = total / data.n
    best = _break_tie(cv_error, null_fit, tie_break)
    return CvResult(
        lambda_grid=grid,
        cv_error=cv_error,
        chosen_lambda=float(grid[best]),
        folds=int(folds),
        mode=mode,
        fold_ids=ids,
        fallbacks=fallbacks,
    )
