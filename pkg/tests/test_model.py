from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import make_data
from rwlasso.exceptions import InvalidArgumentError
from rwlasso.model import Dataset, SupportSet, TrueModel, gram_blocks, sign_match


def test_dataset_requires_centering():
    with pytest.raises(InvalidArgumentError):
        Dataset(np.array([[1.0], [2.0]]), np.array([0.0, 0.0]))


def test_from_raw_and_back():
    X = np.array([[1.0, 2.0], [3.0, 5.0], [4.0, 4.0]])
    beta_true = np.array([0.5, -1.0])
    y = 3.0 + X @ beta_true
    d = Dataset.from_raw(X, y)
    intercept, coef = d.to_original_scale(beta_true)
    assert coef is not None and np.allclose(X @ coef + intercept, y, atol=1e-12)


def test_standardize_back_transform():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((30, 3)) * [1.0, 10.0, 0.1]
    y = rng.standard_normal(30)
    d = Dataset.from_raw(X, y, standardize=True)
    assert np.allclose(d.X.std(axis=0), 1.0)
    b = np.array([1.0, 2.0, 3.0])
    intercept, coef = d.to_original_scale(b)
    assert np.allclose(X @ coef + intercept, d.X @ b + y.mean(), atol=1e-10)


def test_support_set_basics():
    s = SupportSet.from_one_based([3, 1], p=5)
    assert s.indices == (0, 2) and s.one_based() == (1, 3)
    assert 2 in s and 1 not in s and len(s) == 2
    assert s.complement(5).indices == (1, 3, 4)
    assert s.mask(5).tolist() == [True, False, True, False, False]
    with pytest.raises(InvalidArgumentError):
        SupportSet((0, 7), p=5)


def test_true_model_support():
    tm = TrueModel(np.array([1.0, 0.0, -2.0]), 1.0)
    assert tm.support.indices == (0, 2) and tm.q == 2


@pytest.mark.parametrize("a, b, expected", [
    ((1.2, -0.5, 0.0), (3.0, -1.0, 0.0), True),
    ((1.2, 0.5, 0.0), (3.0, -1.0, 0.0), False),
    ((0.0, -0.5), (1.0, -1.0), False),
])
def test_sign_match(a, b, expected):
    assert sign_match(np.array(a), np.array(b)) is expected


@given(st.lists(st.sampled_from([-2.0, -0.1, 0.0, 0.3, 4.0]), min_size=1, max_size=8), st.data())
def test_sign_match_reflexive_symmetric(a, data):
    b = data.draw(st.lists(st.sampled_from([-1.0, 0.0, 1.0]), min_size=len(a), max_size=len(a)))
    a, b = np.array(a), np.array(b)
    assert sign_match(a, a)
    assert sign_match(a, b) == sign_match(b, a)


def test_gram_blocks_orthonormal():
    Z = np.random.default_rng(0).standard_normal((20, 3))
    Q, _ = np.linalg.qr(Z - Z.mean(axis=0))
    d = Dataset(np.sqrt(20) * Q, np.zeros(20))  # X'X / n = I
    C11, C21 = gram_blocks(d, SupportSet((0,)))
    assert np.allclose(C11, [[1.0]], atol=1e-12)
    assert np.allclose(C21, 0.0, atol=1e-12) and C21.shape == (2, 1)


def test_gram_blocks_hand():
    X = np.array([[1.0, 2.0, 0.0], [0.0, -1.0, 1.0], [-1.0, -1.0, -1.0]])
    d = Dataset(X, np.zeros(3))
    C11, C21 = gram_blocks(d, SupportSet((0, 2)))
    # x1'x1 = 2, x1'x3 = 1, x3'x3 = 2, x2'x1 = 3, x2'x3 = 0
    assert np.allclose(C11, np.array([[2.0, 1.0], [1.0, 2.0]]) / 3, atol=1e-15)
    assert np.allclose(C21, np.array([[3.0, 0.0]]) / 3, atol=1e-15)


def test_gram_blocks_full_support():
    d = make_data(n=25, p=4)
    C11, C21 = gram_blocks(d, SupportSet((0, 1, 2, 3)))
    assert C21.shape == (0, 4)
    assert np.allclose(C11, d.X.T @ d.X / 25, atol=1e-14)
    assert np.max(np.abs(C11 - C11.T)) <= 1e-12
    assert np.linalg.eigvalsh(C11).min() >= -1e-10


def test_gram_blocks_empty_support():
    with pytest.raises(InvalidArgumentError):
        gram_blocks(make_data(), SupportSet(()))
