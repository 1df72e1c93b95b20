"""Training losses with analytic gradients with respect to the predictions.

Every squared-error term is mean-reduced over its own support. The SIV loss
differentiates through mean, spread and the rooted third and fourth
standardized moments of the completed multiset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .stats import SIGMA_FLOOR, compute_indexes

DEFAULT_ALPHA = 0.98
DEFAULT_LAMBDA = 0.9
DEFAULT_GAMMA = 0.2

# Guards the cube-root derivative at a zero third moment.
_M3_FLOOR = 1e-12


@dataclass
class LossBreakdown:
    mse_part: float
    siv_part: float
    total: float
    grad: np.ndarray
    flags: tuple = field(default_factory=tuple)


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float).ravel()


def _mse_term(truth: np.ndarray, pred: np.ndarray):
    if truth.size == 0:
        return 0.0, np.zeros(0)
    r = pred - truth
    return float(np.mean(r * r)), 2.0 * r / r.size


def regression_loss(values, mask, predicted) -> LossBreakdown:
    """Squared error of a full-length prediction at the observed positions.

    Parameters
    ----------
    values : array-like, shape (L,)
        Series values; entries where ``mask`` is 0 are ignored.
    mask : array-like of {0, 1}, shape (L,)
    predicted : array-like, shape (L,)
    """
    x, p = _vec(values), _vec(predicted)
    m = _vec(mask).astype(bool)
    if not np.any(m):
        raise ValueError("regression loss needs at least one observed position")
    loss, g = _mse_term(x[m], p[m])
    grad = np.zeros_like(p)
    grad[m] = g
    return LossBreakdown(loss, 0.0, loss, grad)


def rdis_loss(values, mask, drop_mask, predicted) -> LossBreakdown:
    """Remaining-observed error plus dropped-observed error, each mean-reduced."""
    x, p = _vec(values), _vec(predicted)
    m = _vec(mask).astype(bool)
    d = _vec(drop_mask).astype(bool)
    if np.any(d & ~m):
        raise ValueError("dropped positions must be observed")
    keep = m & ~d
    flags = []
    grad = np.zeros_like(p)
    total = 0.0
    for name, sel in (("empty_remaining", keep), ("empty_dropped", d)):
        if not np.any(sel):
            flags.append(name)
            continue
        loss, g = _mse_term(x[sel], p[sel])
        total += loss
        grad[sel] += g
    return LossBreakdown(total, 0.0, total, grad, tuple(flags))


def nonregression_loss(dropped_truth, predicted_at_dropped) -> LossBreakdown:
    x, p = _vec(dropped_truth), _vec(predicted_at_dropped)
    if x.size == 0:
        raise ValueError("non-regression loss needs at least one dropped position")
    if x.shape != p.shape:
        raise ValueError("truth and prediction lengths differ")
    loss, g = _mse_term(x, p)
    return LossBreakdown(loss, 0.0, loss, g)


def weighted_mse_loss(
    dropped_obs_truth, dropped_imp_truth, pred_obs, pred_imp, lam: float = DEFAULT_LAMBDA
) -> LossBreakdown:
    """``lam * MSE(observed drops) + (1 - lam) * MSE(previously imputed drops)``.

    The gradient is laid out as ``[pred_obs..., pred_imp...]``; an empty group
    contributes nothing.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    xo, xi = _vec(dropped_obs_truth), _vec(dropped_imp_truth)
    po, pi = _vec(pred_obs), _vec(pred_imp)
    if xo.shape != po.shape or xi.shape != pi.shape:
        raise ValueError("truth and prediction lengths differ")
    if xo.size == 0 and xi.size == 0:
        raise ValueError("both dropped groups are empty")
    lo, go = _mse_term(xo, po)
    li, gi = _mse_term(xi, pi)
    total = lam * lo + (1.0 - lam) * li
    grad = np.concatenate([lam * go, (1.0 - lam) * gi])
    return LossBreakdown(total, 0.0, total, grad)


def _siv_grad(c: np.ndarray, target) -> tuple[float, np.ndarray]:
    n = c.size
    t = compute_indexes(target)
    mu = float(np.mean(c))
    d = c - mu
    sigma = float(np.sqrt(np.mean(d * d)))
    grad = 2.0 * (mu - t.mu) / n * np.ones(n)
    if sigma < SIGMA_FLOOR:
        loss = (mu - t.mu) ** 2 + (sigma - t.sigma) ** 2 + t.skew_root ** 2 + t.kurt_root ** 2
        return float(loss), grad
    z = d / sigma
    m3 = float(np.mean(z ** 3))
    m4 = float(np.mean(z ** 4))
    s = float(np.cbrt(m3))
    k = m4 ** 0.25
    grad += 2.0 * (sigma - t.sigma) * z / n
    dm3 = 3.0 / (n * sigma) * (z * z - 1.0 - z * m3)
    dm4 = 4.0 / (n * sigma) * (z ** 3 - m3 - z * m4)
    ds = 1.0 / (3.0 * max(abs(m3), _M3_FLOOR) ** (2.0 / 3.0))
    dk = 0.25 * m4 ** -0.75
    grad += 2.0 * (s - t.skew_root) * ds * dm3
    grad += 2.0 * (k - t.kurt_root) * dk * dm4
    loss = (mu - t.mu) ** 2 + (sigma - t.sigma) ** 2 + (s - t.skew_root) ** 2 + (k - t.kurt_root) ** 2
    return float(loss), grad


def siv_loss(target, predicted, fixed=()) -> LossBreakdown:
    """SIV between ``target`` and the completed multiset ``fixed + predicted``.

    The gradient is taken with respect to ``predicted`` only.
    """
    p = _vec(predicted)
    f = _vec(fixed)
    if p.size == 0:
        raise ValueError("siv loss needs at least one predicted value")
    loss, g = _siv_grad(np.concatenate([f, p]), _vec(target))
    return LossBreakdown(0.0, loss, loss, g[f.size:])


def mixture_loss(mse_component: LossBreakdown, siv_component: LossBreakdown, alpha: float = DEFAULT_ALPHA) -> LossBreakdown:
    """``(1 - alpha) * MSE + alpha * SIV`` over one prediction vector."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    g1, g2 = _vec(mse_component.grad), _vec(siv_component.grad)
    if g1.shape != g2.shape:
        raise ValueError("component gradients must cover the same predictions")
    return LossBreakdown(
        mse_part=mse_component.total,
        siv_part=siv_component.total,
        total=(1.0 - alpha) * mse_component.total + alpha * siv_component.total,
        grad=(1.0 - alpha) * g1 + alpha * g2,
        flags=tuple(mse_component.flags) + tuple(siv_component.flags),
    )


# Batched forms used by the window model's training loop. Rows are samples.


def _row_moments(x: np.ndarray, w: np.ndarray):
    n = w.sum(axis=1)
    mu = (x * w).sum(axis=1) / n
    d = (x - mu[:, None]) * w
    sigma = np.sqrt((d * d).sum(axis=1) / n)
    ok = sigma >= SIGMA_FLOOR
    safe = np.where(ok, sigma, 1.0)
    z = d / safe[:, None]
    m3 = np.where(ok, (z ** 3).sum(axis=1) / n, 0.0)
    m4 = np.where(ok, (z ** 4).sum(axis=1) / n, 0.0)
    return n, mu, sigma, ok, z, m3, m4


def batch_siv(target: np.ndarray, target_mask: np.ndarray, completed: np.ndarray,
              m3_floor: float = _M3_FLOOR, completed_mask=None):
    """Per-row SIV and its gradient with respect to every entry of ``completed``.

    ``target_mask`` selects each row's reference values and ``completed_mask``
    (default: everything) the entries of each completed multiset. Entries
    outside it get a zero gradient.
    """
    tw = target_mask.astype(float)
    _, t_mu, t_sigma, _, _, t_m3, t_m4 = _row_moments(np.where(target_mask, target, 0.0), tw)
    t_s, t_k = np.cbrt(t_m3), t_m4 ** 0.25
    cw = np.ones_like(completed) if completed_mask is None else completed_mask.astype(float)
    n, mu, sigma, ok, z, m3, m4 = _row_moments(np.where(cw > 0, completed, 0.0), cw)
    s, k = np.cbrt(m3), m4 ** 0.25
    loss = (mu - t_mu) ** 2 + (sigma - t_sigma) ** 2 + (s - t_s) ** 2 + (k - t_k) ** 2
    nn = n[:, None]
    grad = np.broadcast_to((2.0 * (mu - t_mu))[:, None] / nn, completed.shape).copy()
    grad += (2.0 * (sigma - t_sigma))[:, None] * z / nn
    safe = np.where(ok, sigma, 1.0)[:, None]
    dm3 = 3.0 / (nn * safe) * (z * z - 1.0 - z * m3[:, None])
    dm4 = 4.0 / (nn * safe) * (z ** 3 - m3[:, None] - z * m4[:, None])
    ds = 1.0 / (3.0 * np.maximum(np.abs(m3), m3_floor) ** (2.0 / 3.0))
    dk = np.where(ok, 0.25 * np.where(ok, m4, 1.0) ** -0.75, 0.0)
    ds = np.where(ok, ds, 0.0)
    grad += (2.0 * (s - t_s) * ds)[:, None] * dm3
    grad += (2.0 * (k - t_k) * dk)[:, None] * dm4
    return loss, grad * cw


def batch_weighted_mse(truth: np.ndarray, pred: np.ndarray, obs_mask: np.ndarray, imp_mask: np.ndarray, lam: float):
    """Per-row weighted drop MSE and its gradient with respect to ``pred``."""
    r = np.where(obs_mask | imp_mask, pred - np.where(obs_mask | imp_mask, truth, 0.0), 0.0)
    loss = np.zeros(pred.shape[0])
    grad = np.zeros_like(pred)
    for weight, sel in ((lam, obs_mask), (1.0 - lam, imp_mask)):
        cnt = sel.sum(axis=1)
        has = cnt > 0
        denom = np.where(has, cnt, 1)
        rs = np.where(sel, r, 0.0)
        loss += weight * np.where(has, (rs * rs).sum(axis=1) / denom, 0.0)
        grad += weight * 2.0 * rs / denom[:, None]
    return loss, grad
