"""Multistage select / train / impute loop with dynamic segment length."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .imputers import (
    ImputerSpec,
    TrainConfig,
    fit_window_model,
    impute_segment,
    impute_windows,
)
from .metrics import MetricReport, global_siv, local_siv
from .model import WindowModel
from .series import (
    MISSING,
    SegmentView,
    TimeSeries,
    apply_normalization,
    fit_normalization,
    invert_normalization,
    segment_starts,
    split,
)
from .validation import check_series, restore_shape

logger = logging.getLogger(__name__)


class StageFailureError(RuntimeError):
    def __init__(self, message, stage=None, L=None, history=None):
        super().__init__(message)
        self.stage = stage
        self.L = L
        self.history = history or []


class ProgressStallError(RuntimeError):
    pass


class IncompleteResultError(RuntimeError):
    """Stage budget exhausted; ``partial`` holds the series so far."""

    def __init__(self, message, partial: TimeSeries, reports):
        super().__init__(message)
        self.partial = partial
        self.reports = reports


@dataclass
class FrameworkConfig:
    l: int = 24
    r_percent: float = 10.0
    train: TrainConfig = field(default_factory=TrainConfig)
    imputer: ImputerSpec = field(default_factory=ImputerSpec)
    max_stages: int = 500
    eval_window: Optional[int] = None
    normalize: bool = True
    stage_metrics: bool = True

    def __post_init__(self):
        if self.l < 2:
            raise ValueError("base length l must be >= 2")
        if not 0.0 < self.r_percent <= 100.0:
            raise ValueError("r_percent must lie in (0, 100]")
        if self.max_stages < 1:
            raise ValueError("max_stages must be >= 1")
        if self.eval_window is not None and self.eval_window < 1:
            raise ValueError("eval_window must be positive")
        if self.r_percent == 100.0:
            logger.warning("r_percent=100 selects every segment that is not entirely missing")

    @property
    def window(self) -> int:
        return self.eval_window or self.l


@dataclass
class Selection:
    L: int
    segments: list
    n_total: int
    fallback: bool = False

    @property
    def gap_segments(self) -> list:
        return [s for s in self.segments if s.has_missing]


@dataclass
class StageReport:
    stage: int
    L: int
    samples_total: int
    samples_selected: int
    points_imputed: int
    missing_after: int
    fallback: bool = False
    first_loss: Optional[float] = None
    last_loss: Optional[float] = None
    warm_started: bool = False
    metrics: Optional[MetricReport] = None

    def as_row(self) -> dict:
        row = {
            "stage": self.stage, "L": self.L, "samples_total": self.samples_total,
            "samples_selected": self.samples_selected, "points_imputed": self.points_imputed,
            "missing_after": self.missing_after, "fallback": int(self.fallback),
            "warm_started": int(self.warm_started),
            "first_loss": self.first_loss, "last_loss": self.last_loss,
        }
        m = self.metrics
        row["global_siv"] = m.global_siv if m else None
        row["local_siv"] = m.local_siv if m else None
        return row


def select_samples(series: TimeSeries, l: int, r_percent: float) -> Optional[Selection]:
    """Grow ``L`` by ``l`` until some segment below ``r_percent`` missing has a gap.

    Returns ``None`` when the series has no missing point. ``L`` stops at the
    series length, where the single segment is taken regardless of its rate
    (``fallback=True`` when it is above the threshold).
    """
    if l < 1:
        raise ValueError("l must be positive")
    if series.is_complete:
        return None
    t = len(series)
    cum = np.concatenate([[0], np.cumsum(series.missing)])
    thr = r_percent / 100.0
    L = 0
    while True:
        L = min(L + l, t)
        starts = segment_starts(t, L)
        counts = cum[starts + L] - cum[starts]
        ok = counts / L < thr
        if np.any(ok & (counts > 0)):
            fallback = False
            break
        if L == t:
            ok = np.ones(1, dtype=bool)
            fallback = True
            break
    segs = [SegmentView(series, int(s), L) for s in starts[ok]]
    return Selection(L, segs, n_total=starts.size, fallback=fallback)


def _stage_rng(seed: int, stage: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(stage)])


def _impute_selected(series, segments, spec, model):
    """Predictions for every gap in ``segments``; overlaps keep the first segment's value."""
    gap_segs = [s for s in segments if s.has_missing]
    if not gap_segs:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    if spec.kind == "window":
        V = np.stack([s.values for s in gap_segs])
        S = np.stack([s.status for s in gap_segs])
        Y = impute_windows(model, V, S)
        miss = S == MISSING
        pos = np.concatenate([s.positions[m] for s, m in zip(gap_segs, miss)])
        vals = Y[miss]
    else:
        preds = [impute_segment(spec, s) for s in gap_segs]
        pos = np.concatenate([p.positions for p in preds])
        vals = np.concatenate([p.values for p in preds])
    pos, first = np.unique(pos, return_index=True)
    return pos, vals[first]


def run_stage(series: TimeSeries, cfg: FrameworkConfig, stage_index: int,
              warm_model: Optional[WindowModel] = None):
    """One select -> train -> impute cycle.

    Returns ``(new_series, StageReport, model)``; ``model`` is ``None`` for
    classical imputers.
    """
    sel = select_samples(series, cfg.l, cfg.r_percent)
    if sel is None:
        raise ValueError("series has no missing points")
    rng = _stage_rng(cfg.train.seed, stage_index)
    model, history, warm = None, [], False
    if cfg.imputer.trainable:
        if warm_model is not None and warm_model.length == sel.L:
            model, warm = warm_model, True
        else:
            model = WindowModel(sel.L, cfg.imputer.hidden, seed=rng)
        try:
            history = fit_window_model(model, sel.segments, cfg.train, rng)
        except FloatingPointError as exc:
            raise StageFailureError(
                f"training diverged at stage {stage_index} (L={sel.L}): {exc}",
                stage=stage_index, L=sel.L, history=history,
            ) from exc
    pos, vals = _impute_selected(series, sel.segments, cfg.imputer, model)
    if not np.all(np.isfinite(vals)):
        raise StageFailureError(f"non-finite predictions at stage {stage_index}", stage=stage_index, L=sel.L)
    new = series.with_imputations(pos, vals, stage_index)
    metrics = None
    if cfg.stage_metrics and np.any(series.observed):
        metrics = MetricReport(
            global_siv=global_siv(series, new),
            local_siv=local_siv(series, new, min(cfg.window, len(series))),
        )
    report = StageReport(
        stage=stage_index, L=sel.L, samples_total=sel.n_total,
        samples_selected=len(sel.segments), points_imputed=int(pos.size),
        missing_after=new.n_missing, fallback=sel.fallback,
        first_loss=history[0] if history else None,
        last_loss=history[-1] if history else None,
        warm_started=warm, metrics=metrics,
    )
    return new, report, model


def _restore_observed(original: TimeSeries, work: TimeSeries, params) -> TimeSeries:
    out = invert_normalization(work, params) if params is not None else work
    values = np.where(original.observed, original.values, out.values)
    return TimeSeries(values, out.status.copy(), original.time_index)


def run(series: TimeSeries, cfg: FrameworkConfig,
        on_stage: Optional[Callable[[TimeSeries, StageReport], None]] = None):
    """Repeat stages until no point is missing.

    ``on_stage`` receives the de-normalized partial series after every stage
    (used for checkpointing). Returns ``(completed, reports)``.
    """
    if series.is_complete:
        return series, []
    params = fit_normalization(series) if cfg.normalize else None
    work = apply_normalization(series, params) if params is not None else series
    reports: list[StageReport] = []
    model = None
    fallbacks = 0
    for k in range(1, cfg.max_stages + 1):
        before = work.n_missing
        work, rep, model = run_stage(work, cfg, k, warm_model=model)
        reports.append(rep)
        logger.info(
            "stage=%d L=%d selected=%d/%d imputed=%d missing=%d%s",
            rep.stage, rep.L, rep.samples_selected, rep.samples_total,
            rep.points_imputed, rep.missing_after, " fallback" if rep.fallback else "",
        )
        if on_stage is not None:
            on_stage(_restore_observed(series, work, params), rep)
        if work.n_missing >= before:
            raise ProgressStallError(f"stage {k} imputed nothing")
        fallbacks = fallbacks + 1 if rep.fallback else 0
        if fallbacks > 1:
            raise ProgressStallError("whole-series fallback selected twice in a row")
        if work.is_complete:
            return _restore_observed(series, work, params), reports
    partial = _restore_observed(series, work, params)
    raise IncompleteResultError(
        f"{partial.n_missing} points still missing after {cfg.max_stages} stages", partial, reports
    )


def one_stage_impute(series: TimeSeries, L: int, imputer: ImputerSpec, train: TrainConfig,
                     normalize: bool = True) -> TimeSeries:
    """Single fixed-length train-and-impute pass over every segment.

    Segments with no known value are imputed from an all-masked input.
    """
    if series.is_complete:
        return series
    params = fit_normalization(series) if normalize else None
    work = apply_normalization(series, params) if params is not None else series
    L = min(L, len(series))
    segs = split(work, L)
    model = None
    if imputer.trainable:
        rng = _stage_rng(train.seed, 1)
        model = WindowModel(L, imputer.hidden, seed=rng)
        fit_window_model(model, segs, train, rng)
    pos, vals = _impute_selected(work, segs, imputer, model)
    work = work.with_imputations(pos, vals, 1)
    return _restore_observed(series, work, params)


class MLSIFImputer(TransformerMixin, BaseEstimator):
    """Multistage imputer for a single univariate series.

    ``fit`` validates the series and records its normalization; ``transform``
    runs the stage loop on the series it is given (the procedure is
    transductive, every stage retrains on the data at hand).

    Parameters
    ----------
    base_length : int, default=24
        Increment ``l`` of the segment length.
    rate_threshold : float, default=10.0
        Segments are selected when their missing rate is below this percent.
    imputer : {'window', 'mean', 'linear', 'spline'}, default='window'
    alpha, lam, gamma : float
        Mixture weight, observed-vs-imputed drop weight and drop proportion.
    random_state : int, default=0
    """

    def __init__(self, base_length=24, rate_threshold=10.0, imputer="window", hidden=64,
                 alpha=0.98, lam=0.9, gamma=0.2, epochs=30, learning_rate=1e-3,
                 batch_size=8, optimizer="adam", max_stages=500, eval_window=None,
                 normalize=True, random_state=0):
        self.base_length = base_length
        self.rate_threshold = rate_threshold
        self.imputer = imputer
        self.hidden = hidden
        self.alpha = alpha
        self.lam = lam
        self.gamma = gamma
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.optimizer = optimizer
        self.max_stages = max_stages
        self.eval_window = eval_window
        self.normalize = normalize
        self.random_state = random_state

    def _config(self) -> FrameworkConfig:
        return FrameworkConfig(
            l=self.base_length,
            r_percent=self.rate_threshold,
            train=TrainConfig(alpha=self.alpha, lam=self.lam, gamma=self.gamma,
                              epochs=self.epochs, learning_rate=self.learning_rate,
                              seed=self.random_state or 0, batch_size=self.batch_size,
                              optimizer=self.optimizer),
            imputer=ImputerSpec(self.imputer, self.hidden),
            max_stages=self.max_stages,
            eval_window=self.eval_window,
            normalize=self.normalize,
        )

    def fit(self, X, y=None):
        x, _ = check_series(X)
        self.config_ = self._config()
        series = TimeSeries(x)
        self.normalization_ = fit_normalization(series) if self.normalize and not series.is_complete else None
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        x, shape = check_series(X)
        completed, reports = run(TimeSeries(x), self.config_)
        self.stage_reports_ = reports
        self.n_stages_ = len(reports)
        self.status_ = completed.status.copy()
        return restore_shape(completed.values, shape)
