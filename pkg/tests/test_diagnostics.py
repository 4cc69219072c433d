from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import make_data
from oracles import naive_mse, tv_piecewise
from rwlasso.diagnostics import (
    Ecdf,
    batch_mse,
    batch_mspe,
    check_irrepresentable,
    check_irrepresentable_cov,
    coverage,
    credible_interval,
    diagnose,
    irrepresentable_from_blocks,
    ks_critical,
    normality_check,
    selection_probabilities,
    tv_distance,
)
from rwlasso.exceptions import InvalidArgumentError
from rwlasso.model import Dataset, SupportSet, TrueModel
from rwlasso.samplers import two_step_sample
from rwlasso.solver import lambda_max
from rwlasso.weights import WeightDistribution

samples = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=25)


def test_mse_zero_for_exact_fit():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((4, 4))
    X -= X.mean(axis=0)
    beta = np.array([1.0, -1.0, 0.5, 2.0])
    y = X @ beta
    d = Dataset(X, y - y.mean())
    assert batch_mse(beta[None, :], d) == pytest.approx(0.0, abs=1e-20)


def test_mse_identical_draws_and_naive_oracle(small_data):
    rng = np.random.default_rng(1)
    beta = rng.standard_normal(small_data.p)
    one = batch_mse(beta[None, :], small_data)
    assert batch_mse(np.tile(beta, (7, 1)), small_data) == pytest.approx(one, rel=1e-14)
    draws = rng.standard_normal((5, small_data.p))
    expected = naive_mse(draws.tolist(), small_data.X.tolist(), small_data.y.tolist())
    assert abs(batch_mse(draws, small_data) - expected) < 1e-12 * max(1.0, expected)


def test_mspe_uses_test_data(small_data):
    test = make_data(seed=11)
    draws = np.ones((3, small_data.p))
    assert batch_mspe(draws, test) == batch_mse(draws, test)


def test_mse_dimension_check(small_data):
    with pytest.raises(InvalidArgumentError):
        batch_mse(np.ones((2, small_data.p + 1)), small_data)


def test_selection_probabilities_basic():
    assert np.array_equal(selection_probabilities(np.zeros((5, 3))), [0.0, 0.0, 0.0])
    draws = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [-3.0, 0.0]])
    assert selection_probabilities(draws)[0] == 0.75


def test_credible_interval_constant():
    low, high, width = credible_interval(np.full((10, 2), 3.5))
    assert np.array_equal(low, [3.5, 3.5]) and np.array_equal(width, [0.0, 0.0])


def test_credible_interval_linear_interpolation():
    draws = np.arange(1, 101, dtype=float)[:, None]
    low, high, _ = credible_interval(draws, 0.90)
    # order statistic at h = (n - 1) * q: 99 * 0.05 = 4.95 -> 5 + 0.95 * (6 - 5)
    assert low[0] == pytest.approx(5.95, abs=1e-12)
    assert high[0] == pytest.approx(95.05, abs=1e-12)


def test_credible_interval_arguments():
    with pytest.raises(InvalidArgumentError):
        credible_interval(np.ones((5, 2)), 1.0)
    with pytest.raises(InvalidArgumentError):
        credible_interval(np.ones((1, 2)))


def test_coverage_flag():
    cov = coverage(np.array([0.0, 1.0]), np.array([2.0, 3.0]), np.array([1.0, 0.5]))
    assert cov.tolist() == [True, False]


def test_credible_interval_gaussian_coverage():
    rng = np.random.default_rng(2024)
    reps = 2000
    draws = rng.standard_normal((reps, 200))  # one batch of B=200 per replicate
    truth = rng.standard_normal(reps)  # a fresh target from the same law
    low, high, _ = credible_interval(draws.T, 0.90)
    hits = np.mean((low <= truth) & (truth <= high))
    assert abs(hits - 0.90) <= 0.03


# --- ecdf distance ------------------------------------------------------------

def test_ecdf_right_continuous():
    F = Ecdf([0.0, 1.0, 1.0, 2.0])
    assert F(-0.1) == 0.0 and F(0.0) == 0.25 and F(1.0) == 0.75 and F(5.0) == 1.0


def test_tv_identical_is_zero():
    a = np.random.default_rng(0).standard_normal(50)
    assert tv_distance(a, a.copy()) == 0.0


def test_tv_two_points():
    got = tv_distance([0.0], [1.0], lo=-0.5, hi=1.5, step=0.001)
    assert got == pytest.approx(0.5, abs=2e-3)
    assert got == pytest.approx(tv_piecewise([0.0], [1.0], -0.5, 1.5), abs=2e-3)


@given(samples, samples)
def test_tv_symmetric_and_matches_oracle(a, b):
    d = tv_distance(a, b)
    assert d == tv_distance(b, a)
    lo = min(min(a), min(b)) - 0.001
    hi = max(max(a), max(b)) + 0.001
    assert abs(d - tv_piecewise(a, b, lo, lo + 0.001 * np.ceil((hi - lo) / 0.001 - 1e-9))) <= 2 * 0.001


@given(samples, samples, samples)
def test_tv_triangle_on_fixed_grid(a, b, c):
    lo, hi = -6.0, 6.0
    ab, bc, ac = tv_distance(a, b, lo, hi), tv_distance(b, c, lo, hi), tv_distance(a, c, lo, hi)
    assert ac <= ab + bc + 1e-12


def test_tv_argument_checks():
    with pytest.raises(InvalidArgumentError):
        tv_distance([0.0], [1.0], step=0.0)
    with pytest.raises(InvalidArgumentError):
        tv_distance([0.0], [1.0], lo=1.0, hi=0.0)


# --- irrepresentable condition ---------------------------------------------------

def test_irrepresentable_orthogonal():
    Z = np.random.default_rng(3).standard_normal((40, 5))
    Q, _ = np.linalg.qr(Z - Z.mean(axis=0))
    d = Dataset(np.sqrt(40) * Q, np.zeros(40))
    rep = check_irrepresentable(d, TrueModel(np.array([1.0, -2.0, 0.0, 0.0, 0.0]), 1.0))
    assert np.allclose(rep.lhs, 0.0, atol=1e-12)
    assert rep.eta_star == pytest.approx(1.0, abs=1e-12) and rep.satisfied


def test_irrepresentable_violated_by_hand():
    # one irrelevant column equally correlated (0.6) with two relevant ones
    C11 = np.eye(2)
    C21 = np.array([[0.6, 0.6]])
    rep = irrepresentable_from_blocks(C11, C21, [1.0, 1.0])
    assert rep.lhs[0] == pytest.approx(1.2) and not rep.satisfied


def test_irrepresentable_equality_is_violated():
    rep = irrepresentable_from_blocks(np.eye(2), np.array([[0.5, 0.5]]), [1.0, 1.0])
    assert rep.lhs[0] == 1.0 and not rep.satisfied


@given(st.lists(st.floats(0.1, 10), min_size=3, max_size=3), st.integers(0, 1000))
def test_irrepresentable_scale_invariant(scales, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((6, 6))
    cov = A @ A.T + 6 * np.eye(6)
    base = np.array([1.0, -1.0, 1.0, 0.0, 0.0, 0.0])
    scaled = base * np.r_[scales, [1.0, 1.0, 1.0]]
    r1 = check_irrepresentable_cov(cov, TrueModel(base, 1.0))
    r2 = check_irrepresentable_cov(cov, TrueModel(scaled, 1.0))
    assert np.array_equal(r1.lhs, r2.lhs) and r1.satisfied == r2.satisfied


def test_irrepresentable_needs_proper_support():
    with pytest.raises(InvalidArgumentError):
        check_irrepresentable_cov(np.eye(3), TrueModel(np.zeros(3), 1.0))
    with pytest.raises(InvalidArgumentError):
        check_irrepresentable_cov(np.eye(3), TrueModel(np.ones(3), 1.0))


# --- normality ----------------------------------------------------------------

def test_ks_critical_value():
    assert ks_critical(2000) == pytest.approx(1.6276 / np.sqrt(2000), rel=1e-4)


def test_normality_null_calibration():
    rng = np.random.default_rng(5)
    n, B = 400, 2000
    cov = np.array([[2.0, 0.6], [0.6, 1.0]])
    center = np.array([1.0, -1.0, 0.0])
    Z = rng.multivariate_normal(np.zeros(2), cov, size=B) / np.sqrt(n)
    draws = np.zeros((B, 3))
    draws[:, :2] = center[:2] + Z
    res = normality_check(draws, center, SupportSet((0, 1)), cov, n)
    assert res.ks_stat < 1.63 / np.sqrt(B) and res.passes()
    assert np.allclose(res.var, 1.0, atol=0.1)


def test_normality_degenerate_batch():
    draws = np.zeros((100, 2))
    res = normality_check(draws, np.zeros(2), SupportSet((0, 1)), np.eye(2), 50)
    assert res.ks_stat >= 0.5 and not res.passes()


# --- report -------------------------------------------------------------------

def test_diagnose_two_step_batch(small_data):
    batch = two_step_sample(small_data, 0.2 * lambda_max(small_data), 50,
                            WeightDistribution.exponential(1.0), "rw1", seed=3)
    beta0 = np.r_[2.0, -1.5, 1.0, np.zeros(small_data.p - 3)]
    rep = diagnose(batch, small_data, make_data(seed=99), beta0, batch.draws[::-1])
    assert rep.mspe is not None and rep.covered is not None
    assert np.allclose(rep.tv_per_var, 0.0)  # same draws in another order
    counts = np.zeros(small_data.p)
    for s in batch.selected:
        counts[list(s)] += 1
    assert np.array_equal(rep.select_prob, counts / 50)
    d = rep.to_dict()
    assert set(d) >= {"mse", "mspe", "select_prob", "ci_low", "ci_high", "ci_width", "covered", "tv", "tv_mean"}
