import numpy as np
import pytest

from mlsif.losses import (
    batch_siv,
    batch_weighted_mse,
    mixture_loss,
    nonregression_loss,
    rdis_loss,
    regression_loss,
    siv_loss,
    weighted_mse_loss,
)
from mlsif.stats import siv

import oracles


def rel_err(g, fd):
    return np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-8)


def test_regression_hand_case():
    lb = regression_loss([1.0, 5.0, 3.0], [1, 0, 1], [2.0, 0.0, 3.0])
    assert lb.total == 0.5
    assert list(lb.grad) == [1.0, 0.0, 0.0]


def test_regression_fd(rng):
    for _ in range(20):
        n = int(rng.integers(3, 30))
        x, m = rng.normal(size=n), rng.random(n) < 0.7
        m[0] = True
        f = lambda p: regression_loss(x, m, p).total
        p = rng.normal(size=n)
        assert rel_err(regression_loss(x, m, p).grad, oracles.central_difference(f, p)) < 1e-6


def test_rdis_without_drops_is_regression(rng):
    x, p = rng.normal(size=10), rng.normal(size=10)
    m = np.ones(10)
    lb = rdis_loss(x, m, np.zeros(10), p)
    assert lb.total == regression_loss(x, m, p).total
    assert "empty_dropped" in lb.flags


def test_rdis_rejects_dropping_missing():
    with pytest.raises(ValueError):
        rdis_loss([1.0, 2.0], [1, 0], [0, 1], [0.0, 0.0])


def test_nonregression_single_point():
    lb = nonregression_loss([2.0], [5.0])
    assert lb.total == 9.0 and list(lb.grad) == [6.0]
    with pytest.raises(ValueError):
        nonregression_loss([], [])


def test_weighted_mse_lambda_extremes(rng):
    xo, xi = rng.normal(size=4), rng.normal(size=3)
    po, pi = rng.normal(size=4), rng.normal(size=3)
    assert weighted_mse_loss(xo, xi, po, pi, 1.0).total == pytest.approx(oracles.mse(xo, po))
    assert weighted_mse_loss(xo, xi, po, pi, 0.0).total == pytest.approx(oracles.mse(xi, pi))
    # Empty group contributes nothing.
    assert weighted_mse_loss(xo, [], po, [], 0.9).total == pytest.approx(0.9 * oracles.mse(xo, po))


def test_siv_loss_value_matches_metric(rng):
    t, fixed, p = rng.normal(size=40), rng.normal(size=30), rng.normal(size=10)
    assert siv_loss(t, p, fixed).total == pytest.approx(siv(t, np.concatenate([fixed, p])), rel=1e-12)


def test_siv_loss_zero_at_target(rng):
    t = rng.exponential(size=20)
    lb = siv_loss(t, t[10:], t[:10])
    assert lb.total == pytest.approx(0.0, abs=1e-24)
    assert np.allclose(lb.grad, 0.0, atol=1e-10)


def test_siv_fd(rng):
    for _ in range(30):
        t = rng.gamma(2.0, size=int(rng.integers(5, 60)))
        fixed = rng.normal(size=int(rng.integers(0, 30)))
        p = rng.normal(size=int(rng.integers(1, 20)))
        f = lambda q: siv_loss(t, q, fixed).total
        assert rel_err(siv_loss(t, p, fixed).grad, oracles.central_difference(f, p)) < 1e-4


def test_mixture_extremes(rng):
    x, p = rng.normal(size=8), rng.normal(size=8)
    a = nonregression_loss(x, p)
    b = siv_loss(x, p)
    assert mixture_loss(a, b, 0.0).total == a.total
    assert mixture_loss(a, b, 1.0).total == b.total
    assert np.array_equal(mixture_loss(a, b, 0.0).grad, a.grad)


def test_batch_siv_matches_single_row_and_fd(rng):
    T = rng.gamma(2.0, size=(3, 25))
    TM = rng.random((3, 25)) < 0.8
    C = rng.normal(size=(3, 25))
    CM = rng.random((3, 25)) < 0.9
    loss, grad = batch_siv(T, TM, C, completed_mask=CM)
    for i in range(3):
        assert loss[i] == pytest.approx(siv(T[i][TM[i]], C[i][CM[i]]), rel=1e-10)
        assert np.all(grad[i][~CM[i]] == 0.0)
        f = lambda c: batch_siv(T[i:i + 1], TM[i:i + 1], c[None, :], completed_mask=CM[i:i + 1])[0][0]
        assert rel_err(grad[i], oracles.central_difference(f, C[i])) < 1e-4


def test_batch_weighted_mse_matches_scalar(rng):
    truth, pred = rng.normal(size=(2, 12)), rng.normal(size=(2, 12))
    obs = np.zeros((2, 12), bool)
    imp = np.zeros((2, 12), bool)
    obs[:, :3] = True
    imp[:, 5:7] = True
    loss, grad = batch_weighted_mse(truth, pred, obs, imp, 0.9)
    for i in range(2):
        ref = weighted_mse_loss(truth[i, :3], truth[i, 5:7], pred[i, :3], pred[i, 5:7], 0.9)
        assert loss[i] == pytest.approx(ref.total)
        assert np.allclose(np.concatenate([grad[i, :3], grad[i, 5:7]]), ref.grad)
