"""Point-wise error metrics and the whole-series SIV metrics.

Point-wise metrics compare removed ground truth ``O`` with imputed values
``P`` at the same positions. ``global_siv`` and ``local_siv`` compare a
series before and after imputation and need no ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .series import TimeSeries, split
from .stats import siv, siv_imputation


class UndefinedMetricError(ValueError):
    """Metric has a zero denominator for the given inputs."""


@dataclass(frozen=True)
class PairedEval:
    truth: np.ndarray
    predicted: np.ndarray

    def __init__(self, truth, predicted):
        truth = np.asarray(truth, dtype=float).ravel()
        predicted = np.asarray(predicted, dtype=float).ravel()
        if truth.shape != predicted.shape:
            raise ValueError("truth and predicted must have equal lengths")
        if truth.size == 0:
            raise ValueError("metrics need at least one pair")
        if not (np.all(np.isfinite(truth)) and np.all(np.isfinite(predicted))):
            raise ValueError("metric inputs must be finite")
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "predicted", predicted)

    def __len__(self):
        return self.truth.size


def _pairs(truth, predicted) -> PairedEval:
    if isinstance(truth, PairedEval):
        return truth
    return PairedEval(truth, predicted)


def mse(truth, predicted=None) -> float:
    e = _pairs(truth, predicted)
    return float(np.mean((e.predicted - e.truth) ** 2))


def mae(truth, predicted=None) -> float:
    e = _pairs(truth, predicted)
    return float(np.mean(np.abs(e.predicted - e.truth)))


def rmse(truth, predicted=None) -> float:
    return math.sqrt(mse(truth, predicted))


def rmae(truth, predicted=None) -> float:
    return math.sqrt(mae(truth, predicted))


def d2(truth, predicted=None) -> float:
    """Index of agreement, ``1 - SSE / sum((|p - o_bar| + |o - o_bar|)^2)``."""
    e = _pairs(truth, predicted)
    o_bar = np.mean(e.truth)
    denom = float(np.sum((np.abs(e.predicted - o_bar) + np.abs(e.truth - o_bar)) ** 2))
    if denom <= 0.0:
        raise UndefinedMetricError("d2 is undefined: truth is constant and P equals its mean")
    return 1.0 - float(np.sum((e.predicted - e.truth) ** 2)) / denom


def r2(truth, predicted=None) -> float:
    """Squared Pearson correlation between prediction and truth."""
    e = _pairs(truth, predicted)
    if len(e) < 2:
        raise UndefinedMetricError("r2 needs at least two pairs")
    dp = e.predicted - np.mean(e.predicted)
    do = e.truth - np.mean(e.truth)
    vp = float(np.mean(dp * dp))
    vo = float(np.mean(do * do))
    if vp == 0.0 or vo == 0.0:
        raise UndefinedMetricError("r2 is undefined for a constant sequence")
    cov = float(np.mean(dp * do))
    return cov * cov / (vp * vo)


def _before_known(before: TimeSeries, include_imputed: bool) -> np.ndarray:
    return ~before.missing if include_imputed else before.observed


def _check_pair(before: TimeSeries, after: TimeSeries):
    if len(before) != len(after):
        raise ValueError("before and after series must have equal lengths")


def global_siv(before: TimeSeries, after: TimeSeries, include_imputed: bool = False) -> float:
    """SIV between the known values of ``before`` and every non-missing value of ``after``.

    Only ``Observed`` points of ``before`` count as known unless
    ``include_imputed`` is set.
    """
    _check_pair(before, after)
    known = _before_known(before, include_imputed)
    if not np.any(known):
        raise ValueError("before series has no observed points")
    return siv(before.values[known], after.known_values())


def local_siv(
    before: TimeSeries,
    after: TimeSeries,
    eval_window: int,
    include_imputed: bool = False,
) -> float:
    """Sum of per-segment SIVs over a split of both series at ``eval_window``.

    Segments without a known point in ``before`` are skipped.
    """
    _check_pair(before, after)
    known = _before_known(before, include_imputed)
    if not np.any(known):
        raise ValueError("before series has no observed points")
    terms = []
    for seg in split(before, eval_window):
        sl = slice(seg.start, seg.stop)
        ref = before.values[sl][known[sl]]
        if ref.size == 0:
            continue
        done = after.values[sl][~after.missing[sl]]
        terms.append(siv_imputation(ref, done))
    return float(np.sum(terms)) if terms else 0.0


METRIC_NAMES = ("mse", "mae", "rmse", "rmae", "r2", "d2", "global_siv", "local_siv")


@dataclass
class MetricReport:
    mse: Optional[float] = None
    mae: Optional[float] = None
    rmse: Optional[float] = None
    rmae: Optional[float] = None
    r2: Optional[float] = None
    d2: Optional[float] = None
    global_siv: Optional[float] = None
    local_siv: Optional[float] = None
    reasons: dict = None

    def __post_init__(self):
        if self.reasons is None:
            self.reasons = {}

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "reasons"}

    def to_record(self) -> str:
        """Flat ``key=value`` text, absent metrics written as ``NA``."""
        return " ".join(f"{k}={_fmt(v)}" for k, v in self.as_dict().items())

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(**{k: (None if d.get(k) in (None, "", "NA") else float(d[k])) for k in METRIC_NAMES})


def _fmt(v) -> str:
    return "NA" if v is None else repr(float(v))


def evaluate(
    truth=None,
    predicted=None,
    before: Optional[TimeSeries] = None,
    after: Optional[TimeSeries] = None,
    eval_window: Optional[int] = None,
) -> MetricReport:
    """Every applicable metric; inapplicable ones stay ``None`` with a reason."""
    report = MetricReport()
    if truth is not None and len(np.ravel(truth)) > 0:
        e = PairedEval(truth, predicted)
        report.mse = mse(e)
        report.mae = mae(e)
        report.rmse = math.sqrt(report.mse)
        report.rmae = math.sqrt(report.mae)
        for name, fn in (("r2", r2), ("d2", d2)):
            try:
                setattr(report, name, fn(e))
            except UndefinedMetricError as exc:
                report.reasons[name] = str(exc)
    else:
        for name in ("mse", "mae", "rmse", "rmae", "r2", "d2"):
            report.reasons[name] = "no held-out ground truth"
    if before is not None and after is not None:
        try:
            report.global_siv = global_siv(before, after)
            window = eval_window or len(before)
            report.local_siv = local_siv(before, after, min(window, len(before)))
        except ValueError as exc:
            report.reasons["global_siv"] = report.reasons["local_siv"] = str(exc)
    else:
        report.reasons["global_siv"] = report.reasons["local_siv"] = "no before/after series"
    return report
