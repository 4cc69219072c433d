"""scikit-learn style estimators wrapping the solver and the samplers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .diagnostics import credible_interval, selection_probabilities
from .exceptions import InvalidArgumentError
from .model import Dataset
from .samplers import (
    CvMode,
    Procedure,
    cross_validate,
    lasso_ls,
    one_step_sample,
    residual_bootstrap,
    two_step_sample,
)
from .solver import SolverConfig, solve_weighted_lasso
from .weights import DEFAULT_DISTRIBUTION, WeightDistribution, WeightDraw, WeightScheme


def _seed(random_state):
    if random_state is None:
        return int(np.random.SeedSequence().entropy % (2**63))
    if isinstance(random_state, (int, np.integer)) and random_state >= 0:
        return int(random_state)
    raise InvalidArgumentError("random_state must be a non-negative int or None")


class WeightedLasso(RegressorMixin, BaseEstimator):
    """LASSO with optional observation and penalty weights.

    Minimises ``sum_i w_i (y_i - b0 - x_i'b)^2 + lam * sum_j v_j |b_j|`` after
    centering ``X`` and ``y``. Note there is no 1/2 or 1/n on the loss;
    ``Lasso(alpha)`` in scikit-learn corresponds to ``lam = 2 * n * alpha``.

    Centering uses unweighted means and the intercept is not re-estimated
    from the weights, matching the random-weighting convention. So an
    integer ``sample_weight`` is *not* the same as repeating rows.
    """

    def __init__(self, lam=1.0, kkt_tol=1e-8, max_sweeps=100_000):
        self.lam = lam
        self.kkt_tol = kkt_tol
        self.max_sweeps = max_sweeps

    def fit(self, X, y, sample_weight=None, penalty_factor=None):
        X, y = validate_data(self, X, y, y_numeric=True, ensure_min_samples=2)
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise InvalidArgumentError("lam must be finite and non-negative")
        data = Dataset.from_raw(X, y)
        w_obs = np.ones(data.n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        w_pen = np.ones(data.p) if penalty_factor is None else np.asarray(penalty_factor, dtype=float)
        if w_obs.shape != (data.n,) or w_pen.shape != (data.p,):
            raise InvalidArgumentError("sample_weight must have length n and penalty_factor length p")
        if np.any(w_obs < 0) or np.any(w_pen <= 0):
            raise InvalidArgumentError("weights must be non-negative and penalty factors positive")
        w = WeightDraw(w_obs=w_obs, w_pen=w_pen, scheme=WeightScheme.OBS_ONLY, draw_index=0, seed=0)
        fit = solve_weighted_lasso(data, w, float(self.lam), SolverConfig(self.kkt_tol, self.max_sweeps))
        self.intercept_, self.coef_ = data.to_original_scale(fit.beta)
        self.n_iter_ = fit.iterations
        self.kkt_residual_ = fit.kkt_residual
        self.converged_ = fit.converged
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        return X @ self.coef_ + self.intercept_


class _BaseSampler(RegressorMixin, BaseEstimator):
    # subclasses set _procedure and implement _draw(data, lam, seed, cfg)

    def _cv_mode(self):
        return CvMode.TWO_STEP if self._procedure() is Procedure.TWO_STEP else CvMode.ONE_STEP

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True, ensure_min_samples=2)
        if not (isinstance(self.n_draws, (int, np.integer)) and self.n_draws >= 1):
            raise InvalidArgumentError("n_draws must be an integer >= 1")
        data = Dataset.from_raw(X, y)
        seed = _seed(self.random_state)
        cfg = SolverConfig(kkt_tol=self.kkt_tol)
        if isinstance(self.lam, str):
            if self.lam != "cv":
                raise InvalidArgumentError("lam must be 'cv' or a non-negative number")
            self.cv_result_ = cross_validate(data, self.cv_folds, mode=self._cv_mode(), seed=seed, cfg=cfg,
                                             workers=self.n_jobs)
            self.lambda_ = self.cv_result_.chosen_lambda
        else:
            self.cv_result_ = None
            self.lambda_ = float(self.lam)
        self.batch_ = self._draw(data, self.lambda_, seed, cfg)
        self.intercept_draws_, self.coef_draws_ = data.to_original_scale(self.batch_.draws)
        self.selected_sets_ = list(self.batch_.selected)
        self.selection_probabilities_ = selection_probabilities(self.batch_)
        point = self._point_estimate(data, self.lambda_, cfg)
        self.intercept_, self.coef_ = data.to_original_scale(point)
        return self

    def _point_estimate(self, data, lam, cfg):
        if self._cv_mode() is CvMode.TWO_STEP:
            return lasso_ls(data, lam, cfg)[0]
        return solve_weighted_lasso(data, WeightDraw.unit(data.n, data.p), lam, cfg).beta

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        return X @ self.coef_ + self.intercept_

    def predict_draws(self, X):
        """Predictions for every draw, shape ``(n_draws, n_samples)``."""
        check_is_fitted(self, "coef_draws_")
        X = validate_data(self, X, reset=False)
        return self.coef_draws_ @ X.T + self.intercept_draws_[:, None]

    def credible_interval(self, level=0.90):
        """Percentile interval per coefficient: ``(low, high)``."""
        check_is_fitted(self, "coef_draws_")
        low, high, _ = credible_interval(self.coef_draws_, level)
        return low, high


class RandomWeightingLasso(_BaseSampler):
    """Random-weighting posterior samples for the LASSO.

    ``procedure="two-step"`` selects with a weighted LASSO and refits by
    weighted least squares on the selected columns; ``"one-step"`` keeps the
    weighted LASSO solution. ``lam="cv"`` picks lambda by cross-validating
    the matching unweighted procedure.

    Fitted attributes: ``lambda_``, ``coef_draws_`` (n_draws x p),
    ``intercept_draws_``, ``selected_sets_``, ``selection_probabilities_``,
    ``coef_``/``intercept_`` (the unweighted point estimate), ``batch_``.
    """

    def __init__(self, lam="cv", procedure="two-step", scheme="rw1", n_draws=1000, weight_dist=None,
                 cv_folds=10, random_state=0, n_jobs=None, kkt_tol=1e-8):
        self.lam = lam
        self.procedure = procedure
        self.scheme = scheme
        self.n_draws = n_draws
        self.weight_dist = weight_dist
        self.cv_folds = cv_folds
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.kkt_tol = kkt_tol

    def _procedure(self):
        proc = Procedure(self.procedure)
        if proc is Procedure.RESIDUAL_BOOTSTRAP:
            raise InvalidArgumentError("use ResidualBootstrapLasso for the residual bootstrap")
        return proc

    def _draw(self, data, lam, seed, cfg):
        dist = self.weight_dist
        if dist is None:
            dist = DEFAULT_DISTRIBUTION
        elif isinstance(dist, dict):
            dist = WeightDistribution.from_dict(dist)
        sampler = two_step_sample if self._procedure() is Procedure.TWO_STEP else one_step_sample
        return sampler(data, lam, int(self.n_draws), dist, WeightScheme.parse(self.scheme), seed, cfg, self.n_jobs)


class ResidualBootstrapLasso(_BaseSampler):
    """Residual bootstrap around a LASSO fit at a fixed lambda.

    With ``lam="cv"`` lambda is chosen by plain LASSO cross-validation.
    """

    def __init__(self, lam="cv", n_draws=1000, cv_folds=10, random_state=0, n_jobs=None, kkt_tol=1e-8):
        self.lam = lam
        self.n_draws = n_draws
        self.cv_folds = cv_folds
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.kkt_tol = kkt_tol

    def _procedure(self):
        return Procedure.RESIDUAL_BOOTSTRAP

    def _draw(self, data, lam, seed, cfg):
        return residual_bootstrap(data, lam, int(self.n_draws), seed=seed, cfg=cfg, workers=self.n_jobs)
