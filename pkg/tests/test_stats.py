import math

import numpy as np
import pytest

from mlsif.stats import SIGMA_FLOOR, compute_indexes, siv, siv_from_indexes, siv_imputation

import oracles


def _random_multiset(rng):
    n = int(rng.integers(2, 501))
    kind = rng.integers(0, 4)
    loc, scale = rng.uniform(-10, 10), rng.uniform(0.1, 10)
    if kind == 0:
        x = rng.normal(loc, scale, n)
    elif kind == 1:
        x = loc + rng.exponential(scale, n)
    elif kind == 2:
        x = rng.uniform(loc, loc + scale, n)
    else:
        x = loc - rng.gamma(0.5, scale, n)
    return x


def test_indexes_match_extended_precision_oracle():
    rng = np.random.default_rng(1)
    for _ in range(150):
        x = _random_multiset(rng)
        got = compute_indexes(x)
        want = oracles.indexes(x)
        for g, w in zip(got, want):
            assert oracles.close(g, w), (g, w, x.size)


def test_constant_multiset_has_zero_shape_indexes():
    ix = compute_indexes([3.0] * 7)
    assert ix == (3.0, 0.0, 0.0, 0.0)


def test_symmetric_multiset_has_zero_skew():
    assert compute_indexes([-2.0, -1.0, 1.0, 2.0]).skew_root == 0.0


def test_two_point_kurt_root_is_one():
    # z = +-1, so every standardized power is 1.
    ix = compute_indexes([0.0, 4.0])
    assert ix.mu == 2.0 and ix.sigma == 2.0 and ix.kurt_root == 1.0


def test_gaussian_kurt_root_near_fourth_root_of_three():
    x = np.random.default_rng(0).standard_normal(1_000_000)
    assert compute_indexes(x).kurt_root == pytest.approx(3 ** 0.25, abs=0.01)


def test_siv_properties(rng):
    a, b = rng.normal(size=50), rng.exponential(size=80)
    assert siv(a, a) == 0.0
    assert siv(a, b) == pytest.approx(siv(b, a), rel=1e-15)
    assert siv(a, b) == pytest.approx(float(oracles.siv(a, b)), rel=1e-10)
    assert siv_from_indexes(compute_indexes(a), compute_indexes(b)) == siv(a, b)


def test_siv_hand_case():
    # {0, 2}: mu 1, sigma 1, S 0, K 1.  {1, 1}: mu 1, sigma 0, S 0, K 0.
    assert siv([0.0, 2.0], [1.0, 1.0]) == 2.0


def test_siv_imputation_alias(rng):
    obs, comp = rng.normal(size=30), rng.normal(size=40)
    assert siv_imputation(obs, comp) == siv(obs, comp)


def test_rejects_empty_and_nonfinite():
    with pytest.raises(ValueError):
        compute_indexes([])
    with pytest.raises(ValueError):
        compute_indexes([1.0, math.nan])


def test_sigma_floor_is_tiny():
    assert SIGMA_FLOOR == 1e-12
