"""Segment imputers: mean, linear, natural cubic spline and the window model.

Classical imputers work on one segment at a time and use every known
(observed or previously imputed) value in it. The window model is trained
by randomly dropping known values and scoring the reconstruction with the
weighted-MSE / SIV mixture.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .losses import (
    DEFAULT_ALPHA,
    DEFAULT_GAMMA,
    DEFAULT_LAMBDA,
    LossBreakdown,
    batch_siv,
    batch_weighted_mse,
)
from .model import WindowModel
from .series import MISSING, OBSERVED, SegmentView

KINDS = ("mean", "linear", "spline", "window")


class CannotImputeError(ValueError):
    """Segment has no known value to impute from."""


@dataclass
class TrainConfig:
    alpha: float = DEFAULT_ALPHA
    lam: float = DEFAULT_LAMBDA
    gamma: float = DEFAULT_GAMMA
    epochs: int = 30
    learning_rate: float = 1e-3
    seed: int = 0
    batch_size: int = 8
    optimizer: str = "adam"
    clip_norm: float = 5.0
    m3_floor: float = 1e-12
    siv_gaps: bool = False

    def __post_init__(self):
        for name in ("alpha", "lam", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")


@dataclass
class ImputerSpec:
    kind: str = "window"
    hidden: int = 64

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"imputer kind must be one of {KINDS}, got {self.kind!r}")
        if self.hidden < 1:
            raise ValueError("hidden width must be positive")

    @property
    def trainable(self) -> bool:
        return self.kind == "window"


class Prediction(NamedTuple):
    positions: np.ndarray  # absolute indices into the parent series
    values: np.ndarray
    flags: tuple = ()


def _segment_arrays(segment):
    if isinstance(segment, SegmentView):
        return segment.values, segment.status, segment.start
    values, status = segment
    return np.asarray(values, dtype=float), np.asarray(status), 0


def _known_split(segment):
    values, status, offset = _segment_arrays(segment)
    known = status != MISSING
    idx = np.arange(values.size)
    return values, known, idx, offset


def impute_mean(segment) -> Prediction:
    values, known, idx, off = _known_split(segment)
    gaps = idx[~known]
    if gaps.size == 0:
        return Prediction(gaps + off, np.zeros(0))
    if not np.any(known):
        raise CannotImputeError("segment has no known values")
    return Prediction(gaps + off, np.full(gaps.size, values[known].mean()))


def impute_linear(segment) -> Prediction:
    """Linear interpolation between the nearest known neighbours.

    Leading and trailing gaps take the nearest known value.
    """
    values, known, idx, off = _known_split(segment)
    gaps = idx[~known]
    if gaps.size == 0:
        return Prediction(gaps + off, np.zeros(0))
    if not np.any(known):
        raise CannotImputeError("segment has no known values")
    return Prediction(gaps + off, np.interp(gaps, idx[known], values[known]))


def impute_spline(segment) -> Prediction:
    """Natural cubic spline through the known points.

    Falls back to linear interpolation (flag ``spline_fallback_linear``) with
    fewer than four known points.
    """
    values, known, idx, off = _known_split(segment)
    gaps = idx[~known]
    if gaps.size == 0:
        return Prediction(gaps + off, np.zeros(0))
    if not np.any(known):
        raise CannotImputeError("segment has no known values")
    if np.count_nonzero(known) < 4:
        p = impute_linear(segment)
        return Prediction(p.positions, p.values, ("spline_fallback_linear",))
    cs = CubicSpline(idx[known], values[known], bc_type="natural", extrapolate=True)
    return Prediction(gaps + off, cs(gaps))


CLASSICAL = {"mean": impute_mean, "linear": impute_linear, "spline": impute_spline}


# Window model training


def _as_batch(samples):
    if isinstance(samples, SegmentView):
        samples = [samples]
    if isinstance(samples, tuple) and len(samples) == 2 and isinstance(samples[0], np.ndarray):
        V, S = samples
        return np.atleast_2d(np.asarray(V, dtype=float)), np.atleast_2d(np.asarray(S))
    V = np.stack([s.values for s in samples])
    S = np.stack([s.status for s in samples])
    return V, S


def draw_drops(status: np.ndarray, gamma: float, rng: np.random.Generator) -> np.ndarray:
    """Drop ``round(num_known * gamma)`` known positions per row, uniformly without replacement."""
    known = status != MISSING
    n_drop = np.floor(known.sum(axis=1) * gamma + 0.5).astype(int)
    keys = rng.random(status.shape)
    keys[~known] = 2.0
    order = np.argsort(keys, axis=1, kind="stable")
    rank = np.empty_like(order)
    rows = np.arange(status.shape[0])[:, None]
    rank[rows, order] = np.arange(status.shape[1])[None, :]
    return (rank < n_drop[:, None]) & known


def batch_loss(model: WindowModel, V: np.ndarray, S: np.ndarray, drop: np.ndarray, cfg: TrainConfig):
    """Mixture loss of a batch and the parameter gradients of its mean.

    The SIV term compares each row's known values with the same positions
    after the dropped ones are replaced by predictions. With
    ``cfg.siv_gaps`` the predictions at the row's gaps join the completed
    multiset as well.

    Returns ``(LossBreakdown, param_grads)``; ``param_grads`` is ``None``
    when no row has anything to predict.
    """
    known = S != MISSING
    inputs = known & ~drop
    predicted = ~inputs
    # Gap positions only enter the loss through the SIV term, and only when
    # ``siv_gaps`` is on; otherwise a row without drops has nothing to score.
    active = (predicted if cfg.siv_gaps else drop).any(axis=1)
    flags = ()
    if not np.any(active):
        return LossBreakdown(0.0, 0.0, 0.0, np.zeros_like(V), ("no_op",)), None
    if not np.all(active):
        flags = ("rows_skipped",)
    Vz = np.where(known, V, 0.0)
    Y, cache = model.forward(model.features(Vz, inputs))
    drop_obs = drop & (S == OBSERVED)
    drop_imp = drop & (S > 0)
    mse_row, d_mse = batch_weighted_mse(Vz, Y, drop_obs, drop_imp, cfg.lam)
    if cfg.alpha > 0.0:
        C = np.where(inputs, Vz, Y)
        cmask = None if cfg.siv_gaps else known
        siv_row, d_siv = batch_siv(Vz, known, C, cfg.m3_floor, cmask)
        d_siv = np.where(predicted, d_siv, 0.0)
    else:
        siv_row, d_siv = np.zeros(V.shape[0]), np.zeros_like(Y)
    w = active / active.sum()
    total_row = (1.0 - cfg.alpha) * mse_row + cfg.alpha * siv_row
    d_out = ((1.0 - cfg.alpha) * d_mse + cfg.alpha * d_siv) * w[:, None]
    grads = model.backward(cache, d_out)
    lb = LossBreakdown(
        mse_part=float(np.sum(w * mse_row)),
        siv_part=float(np.sum(w * siv_row)),
        total=float(np.sum(w * total_row)),
        grad=d_out,
        flags=flags,
    )
    if not np.isfinite(lb.total):
        raise FloatingPointError("non-finite training loss")
    return lb, grads


def train_step(model: WindowModel, sample, cfg: TrainConfig, rng: np.random.Generator):
    """Drop, predict, score and update on one sample (or a stacked batch).

    Returns ``(model, LossBreakdown)``. When ``round(num_known * gamma)`` is
    zero for every row (and gaps are not scored) the model is left untouched
    and the breakdown carries the ``no_op`` flag.
    """
    V, S = _as_batch(sample)
    if V.shape[1] != model.length:
        raise ValueError(f"sample length {V.shape[1]} != model length {model.length}")
    drop = draw_drops(S, cfg.gamma, rng)
    lb, grads = batch_loss(model, V, S, drop, cfg)
    if grads is not None:
        model.apply_gradients(grads, cfg.learning_rate, cfg.optimizer, cfg.clip_norm)
    return model, lb


def fit_window_model(model: WindowModel, samples, cfg: TrainConfig, rng: np.random.Generator) -> list[float]:
    """Train for ``cfg.epochs`` epochs of shuffled mini-batches.

    Returns the mean training loss per epoch.
    """
    V, S = _as_batch(samples)
    usable = (S != MISSING).any(axis=1)
    V, S = V[usable], S[usable]
    history = []
    if V.shape[0] == 0:
        return history
    for _ in range(cfg.epochs):
        order = rng.permutation(V.shape[0])
        totals, weights = [], []
        for i in range(0, order.size, cfg.batch_size):
            b = order[i:i + cfg.batch_size]
            _, lb = train_step(model, (V[b], S[b]), cfg, rng)
            if "no_op" not in lb.flags:
                totals.append(lb.total)
                weights.append(b.size)
        model.epochs_trained += 1
        history.append(float(np.average(totals, weights=weights)) if totals else 0.0)
    return history


def impute_model(model: WindowModel, segment) -> Prediction:
    """Deterministic forward pass; predictions at the segment's missing points only."""
    values, status, off = _segment_arrays(segment)
    if values.size != model.length:
        raise ValueError(f"segment length {values.size} != model length {model.length}")
    known = status != MISSING
    gaps = np.flatnonzero(~known)
    if gaps.size == 0:
        return Prediction(gaps + off, np.zeros(0))
    out = model.predict(values[None, :], known[None, :])[0]
    return Prediction(gaps + off, out[gaps])


def impute_windows(model: WindowModel, V: np.ndarray, S: np.ndarray) -> np.ndarray:
    known = S != MISSING
    return model.predict(np.where(known, V, 0.0), known)


def impute_segment(spec: ImputerSpec, segment, model: Optional[WindowModel] = None) -> Prediction:
    if spec.kind == "window":
        if model is None:
            raise ValueError("window imputer needs a trained model")
        return impute_model(model, segment)
    return CLASSICAL[spec.kind](segment)
