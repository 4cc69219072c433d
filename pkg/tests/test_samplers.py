from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import make_data
from rwlasso import samplers
from rwlasso.diagnostics import selection_probabilities
from rwlasso.exceptions import InvalidArgumentError, SingularSystemError
from rwlasso.model import Dataset
from rwlasso.samplers import (
    CvMode,
    Procedure,
    cross_validate,
    fold_assignment,
    lasso_ls,
    one_step_sample,
    residual_bootstrap,
    two_step_sample,
)
from rwlasso.simulation import SETTINGS, build_beta0, generate_dataset, orthogonal_dataset
from rwlasso.solver import lambda_max, lasso, solve_weighted_lasso, weighted_ls
from rwlasso.weights import WeightDistribution, draw_weights

EXP1 = WeightDistribution.exponential(1.0)
UNIT = WeightDistribution.constant(1.0)


def test_unit_weights_one_draw_is_lasso(small_data):
    lam = 0.2 * lambda_max(small_data)
    for scheme in ("rw1", "rw2", "rw3"):
        batch = one_step_sample(small_data, lam, 1, UNIT, scheme, seed=3)
        assert np.max(np.abs(batch.draws[0] - lasso(small_data, lam).beta)) < 1e-10


def test_lambda_zero_draws_average_to_ols():
    d = make_data(n=60, p=4, seed=8)
    batch = one_step_sample(d, 0.0, 400, EXP1, "rw1", seed=1)
    ols, *_ = np.linalg.lstsq(d.X, d.y, rcond=None)
    se = batch.draws.std(axis=0, ddof=1) / np.sqrt(batch.B)
    assert np.all(np.abs(batch.draws.mean(axis=0) - ols) < 3 * se)


def test_setting2_draws_nondegenerate():
    data, _, _ = generate_dataset(SETTINGS[2], 0, 1)
    lam = 1e-4 * lambda_max(data)
    batch = one_step_sample(data, lam, 50, EXP1, "rw1", seed=2)
    assert np.all(batch.draws.var(axis=0) > 0)


def test_two_step_lambda_zero_is_weighted_ols():
    d = make_data(n=30, p=5, seed=4)
    batch = two_step_sample(d, 0.0, 5, EXP1, "rw2", seed=9)
    for b in range(5):
        w = draw_weights(EXP1, "rw2", 30, 5, 9, b)
        expected = weighted_ls(d.X, d.y, w.w_obs, range(5))
        assert np.max(np.abs(batch.draws[b] - expected)) < 1e-10


def test_two_step_consistent_regime_selects_truth():
    data, truth = orthogonal_dataset(500, build_beta0(10, 6), 12)
    lam = 2 * 500 ** 0.9  # lambda / sqrt(n) -> infinity, lambda / n -> 0
    batch = two_step_sample(data, lam, 500, EXP1, "rw1", seed=4)
    frac = np.mean([s == truth.support for s in batch.selected])
    assert frac > 0.95


def test_two_step_structural_sparsity():
    d = make_data(n=40, p=8, seed=6)
    batch = two_step_sample(d, 0.3 * lambda_max(d), 100, EXP1, "rw3", seed=5)
    for beta, s in zip(batch.draws, batch.selected):
        off = np.ones(d.p, bool)
        off[list(s)] = False
        assert np.all(beta[off] == 0.0)
    counts = np.zeros(d.p)
    for s in batch.selected:
        counts[list(s)] += 1
    assert np.array_equal(selection_probabilities(batch), counts / batch.B)


def test_two_step_empty_selection_gives_zero(small_data):
    batch = two_step_sample(small_data, 1e6 * lambda_max(small_data), 3, EXP1, "rw1", seed=0)
    assert np.all(batch.draws == 0.0) and all(len(s) == 0 for s in batch.selected)


def _singular(*args, **kwargs):
    raise SingularSystemError("forced", pivot=0)


def test_two_step_singular_refit_falls_back(small_data, monkeypatch):
    # a LASSO support in general position is never rank deficient, so the
    # refit is forced to fail
    monkeypatch.setattr(samplers, "weighted_ls_refit", _singular)
    lam = 0.2 * lambda_max(small_data)
    batch = two_step_sample(small_data, lam, 4, EXP1, "rw1", seed=1)
    assert [b for b, _ in batch.failures] == [0, 1, 2, 3]
    assert all("singular" in msg and "step-one" in msg for _, msg in batch.failures)
    for b in range(4):
        w = draw_weights(EXP1, "rw1", small_data.n, small_data.p, 1, b, attempt=1)
        assert np.array_equal(batch.draws[b], solve_weighted_lasso(small_data, w, lam).beta)


def test_two_step_singular_retry_uses_fresh_weights(small_data, monkeypatch):
    calls = []
    real = samplers.weighted_ls_refit

    def flaky(data, w, support):
        calls.append(w.w_obs[0])
        if len(calls) == 1:
            raise SingularSystemError("forced", pivot=0)
        return real(data, w, support)

    monkeypatch.setattr(samplers, "weighted_ls_refit", flaky)
    lam = 0.2 * lambda_max(small_data)
    batch = two_step_sample(small_data, lam, 1, EXP1, "rw1", seed=1)
    w1 = draw_weights(EXP1, "rw1", small_data.n, small_data.p, 1, 0, attempt=1)
    assert calls[1] == w1.w_obs[0] and len(batch.failures) == 1
    fit = solve_weighted_lasso(small_data, w1, lam)
    assert np.array_equal(batch.draws[0], real(small_data, w1, fit.active))


def test_residual_bootstrap_noiseless():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((25, 4))
    beta0 = np.array([1.0, -2.0, 0.0, 0.5])
    d = Dataset.from_raw(X, X @ beta0)
    batch = residual_bootstrap(d, 0.0, 20, seed=3)
    assert np.max(np.abs(batch.draws - beta0)) < 1e-8


def test_residual_bootstrap_identity_resample(small_data):
    lam = 0.1 * lambda_max(small_data)
    batch = residual_bootstrap(small_data, lam, 1, seed=0, resampler=lambda rng, n: np.arange(n))
    assert np.max(np.abs(batch.draws[0] - lasso(small_data, lam).beta)) < 1e-9
    assert batch.procedure is Procedure.RESIDUAL_BOOTSTRAP and batch.scheme is None


@pytest.mark.parametrize("sampler", ["one", "two", "rb"])
def test_deterministic_across_workers(small_data, sampler):
    lam = 0.1 * lambda_max(small_data)

    def run(workers):
        if sampler == "rb":
            return residual_bootstrap(small_data, lam, 64, seed=42, workers=workers)
        fn = one_step_sample if sampler == "one" else two_step_sample
        return fn(small_data, lam, 64, EXP1, "rw3", seed=42, workers=workers)

    a, b = run(1), run(4)
    assert a.draws.tobytes() == b.draws.tobytes()
    assert a.selected == b.selected


def test_workers_env_var(small_data, monkeypatch):
    lam = 0.1 * lambda_max(small_data)
    ref = one_step_sample(small_data, lam, 16, EXP1, "rw1", seed=1, workers=1)
    monkeypatch.setenv("RW_LASSO_WORKERS", "3")
    assert one_step_sample(small_data, lam, 16, EXP1, "rw1", seed=1).draws.tobytes() == ref.draws.tobytes()


def test_batch_manifest(small_data):
    batch = one_step_sample(small_data, 1.0, 2, EXP1, "rw2", seed=2**63 + 5)
    m = batch.manifest()
    assert m["seed"] == 2**63 + 5 and m["scheme"] == "rw2" and m["procedure"] == "one-step"
    assert m["distribution"] == {"family": "exponential", "rate": 1.0}


@pytest.mark.parametrize("lam, B", [(-1.0, 5), (np.inf, 5), (1.0, 0)])
def test_sampler_argument_checks(small_data, lam, B):
    with pytest.raises(InvalidArgumentError):
        one_step_sample(small_data, lam, B)


def test_conditional_consistency_improves_with_n():
    rng = np.random.default_rng(7)
    beta0 = build_beta0(10, 6)
    errs = []
    for n in (100, 400, 1600):
        X = rng.standard_normal((n, 10))
        d = Dataset.from_raw(X, X @ beta0 + rng.standard_normal(n))
        batch = two_step_sample(d, n ** 0.75, 500, EXP1, "rw1", seed=n)
        errs.append(np.mean(np.linalg.norm(batch.draws - beta0, axis=1)))
    assert errs[0] > errs[1] > errs[2]


# --- cross-validation -------------------------------------------------------

def test_fold_partition():
    ids = fold_assignment(100, 5, seed=3)
    assert sorted(np.bincount(ids).tolist()) == [20] * 5
    assert set(ids.tolist()) == set(range(5))


@given(st.integers(2, 200), st.integers(2, 12), st.integers(0, 2**63))
def test_fold_sizes_balanced(n, k, seed):
    k = min(k, n)
    sizes = np.bincount(fold_assignment(n, k, seed), minlength=k)
    assert sizes.sum() == n and sizes.max() - sizes.min() <= 1


@pytest.mark.parametrize("mode", list(CvMode))
def test_pure_noise_picks_grid_maximum(mode):
    rng = np.random.default_rng(0)
    d = Dataset.from_raw(rng.standard_normal((50, 5)), rng.standard_normal(50))
    grid = np.geomspace(10 * lambda_max(d), 5 * lambda_max(d), 5)
    cv = cross_validate(d, 5, grid=grid, mode=mode, seed=1)
    assert cv.chosen_lambda == grid[0]
    assert np.all(cv.cv_error == cv.cv_error[0])


def test_cv_is_worker_invariant(small_data):
    a = cross_validate(small_data, 5, seed=9, workers=1)
    b = cross_validate(small_data, 5, seed=9, workers=3)
    assert a.cv_error.tobytes() == b.cv_error.tobytes() and a.chosen_lambda == b.chosen_lambda


def test_cv_error_matches_direct_computation(small_data):
    grid = np.geomspace(lambda_max(small_data), 0.01 * lambda_max(small_data), 7)
    cv = cross_validate(small_data, 4, grid=grid, mode="one-step", seed=2)
    sse = np.zeros(grid.size)
    for f in range(4):
        tr, te = cv.fold_ids != f, cv.fold_ids == f
        train = Dataset.from_raw(small_data.X[tr], small_data.y[tr])
        xm, ym = small_data.X[tr].mean(axis=0), small_data.y[tr].mean()
        for k, lam in enumerate(grid):
            beta = lasso(train, lam).beta
            r = (small_data.y[te] - ym) - (small_data.X[te] - xm) @ beta
            sse[k] += r @ r
    assert np.allclose(cv.cv_error, sse / small_data.n, rtol=1e-7)


def test_cv_two_step_uses_refit(small_data):
    grid = np.geomspace(lambda_max(small_data), 0.05 * lambda_max(small_data), 6)
    one = cross_validate(small_data, 4, grid=grid, mode="one-step", seed=2)
    two = cross_validate(small_data, 4, grid=grid, mode="two-step", seed=2)
    assert not np.allclose(one.cv_error[1:], two.cv_error[1:])
    assert one.cv_error[0] == two.cv_error[0]  # both null at lambda_max


@pytest.mark.parametrize("grid", [[1.0, 2.0], [3.0, -1.0], [], [2.0, 2.0]])
def test_cv_grid_validation(small_data, grid):
    with pytest.raises(InvalidArgumentError):
        cross_validate(small_data, 5, grid=grid)


def test_cv_fold_count_validation(small_data):
    with pytest.raises(InvalidArgumentError):
        cross_validate(small_data, 1)


def test_tie_rules():
    from rwlasso.samplers import _break_tie

    err = np.array([3.0, 1.0, 1.0, 1.0, 1.0, 2.0])
    null = np.zeros(6, bool)
    assert _break_tie(err, null, "largest") == 1
    assert _break_tie(err, null, "smallest") == 4
    assert _break_tie(err, null, "stable") == 2
    with pytest.raises(InvalidArgumentError):
        _break_tie(err, null, "median")


def test_lasso_ls(small_data):
    beta, support = lasso_ls(small_data, 0.2 * lambda_max(small_data))
    assert len(support) > 0
    expected = weighted_ls(small_data.X, small_data.y, None, support.indices)
    assert np.array_equal(beta, expected)


@pytest.mark.slow
def test_two_step_cv_prefers_larger_lambda_orthogonal():
    wins = 0
    for r in range(100):
        d, _ = orthogonal_dataset(200, build_beta0(10, 6), 31, r)
        two = cross_validate(d, 10, mode="two-step", seed=r).chosen_lambda
        one = cross_validate(d, 10, mode="one-step", seed=r).chosen_lambda
        wins += two >= one
    assert wins >= 70
