"""Univariate series with per-point provenance, segmentation and z-scoring.

Point status is stored as a small integer per point:

* ``OBSERVED`` (0): value came from the sensor.
* ``MISSING`` (-1): no value; the stored value is NaN and must never be read.
* ``k >= 1``: value was imputed at stage ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

OBSERVED = 0
MISSING = -1


class InvalidLengthError(ValueError):
    """Segment length outside ``[1, t]``."""


class DegenerateDataError(ValueError):
    """Too few observed points, or zero spread, to fit a normalization."""


def status_label(code: int) -> str:
    if code == OBSERVED:
        return "observed"
    if code == MISSING:
        return "missing"
    if code >= 1:
        return f"imputed({code})"
    raise ValueError(f"invalid status code {code}")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Immutable univariate series.

    Parameters
    ----------
    values : array-like of float, shape (t,)
        Sensor values. Entries at missing points are replaced by NaN.
    status : array-like of int, shape (t,), optional
        Status codes (see module docstring). When omitted, NaN values are
        marked missing and everything else observed.
    time_index : sequence, optional
        Timestamps carried through I/O. Algorithms ignore it.
    """

    values: np.ndarray
    status: np.ndarray
    time_index: Optional[tuple] = None

    def __init__(self, values, status=None, time_index: Optional[Sequence] = None):
        values = np.array(values, dtype=float).ravel()
        if status is None:
            status = np.where(np.isnan(values), MISSING, OBSERVED)
        status = np.array(status, dtype=np.int64).ravel()
        if values.size < 1:
            raise ValueError("a series needs at least one point")
        if status.shape != values.shape:
            raise ValueError(
                f"values and status lengths differ ({values.size} vs {status.size})"
            )
        if np.any(status < MISSING):
            raise ValueError("status codes must be -1 (missing), 0 (observed) or >= 1")
        present = status != MISSING
        if not np.all(np.isfinite(values[present])):
            raise ValueError("non-missing points must carry finite values")
        values[~present] = np.nan
        if time_index is not None:
            time_index = tuple(time_index)
            if len(time_index) != values.size:
                raise ValueError("time_index length must match values")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "status", _frozen(status))
        object.__setattr__(self, "time_index", time_index)

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return (
            f"TimeSeries(t={len(self)}, missing={self.n_missing}, "
            f"imputed={int(np.sum(self.status > 0))})"
        )

    @property
    def missing(self) -> np.ndarray:
        return self.status == MISSING

    @property
    def observed(self) -> np.ndarray:
        return self.status == OBSERVED

    @property
    def imputed(self) -> np.ndarray:
        return self.status > 0

    @property
    def n_missing(self) -> int:
        return int(np.count_nonzero(self.status == MISSING))

    @property
    def missing_rate(self) -> float:
        return self.n_missing / len(self)

    @property
    def is_complete(self) -> bool:
        return self.n_missing == 0

    def observed_values(self) -> np.ndarray:
        return self.values[self.observed]

    def known_values(self) -> np.ndarray:
        """Values of every non-missing point (observed or imputed)."""
        return self.values[~self.missing]

    def with_values(self, values) -> "TimeSeries":
        """Same statuses and timestamps, new values at non-missing points."""
        return TimeSeries(values, self.status.copy(), self.time_index)

    def with_imputations(self, positions, predictions, stage: int) -> "TimeSeries":
        """Fill missing ``positions`` with ``predictions``, tagged ``Imputed(stage)``."""
        if stage < 1:
            raise ValueError("stage numbers start at 1")
        positions = np.asarray(positions, dtype=np.int64)
        predictions = np.asarray(predictions, dtype=float)
        if positions.shape != predictions.shape:
            raise ValueError("positions and predictions must align")
        if positions.size and not np.all(self.status[positions] == MISSING):
            raise ValueError("only missing points can be imputed")
        if not np.all(np.isfinite(predictions)):
            raise ValueError("predictions must be finite")
        values = self.values.copy()
        status = self.status.copy()
        values[positions] = predictions
        status[positions] = stage
        return TimeSeries(values, status, self.time_index)

    def with_missing(self, positions) -> "TimeSeries":
        """Mark observed ``positions`` as missing (imputed points never revert)."""
        positions = np.asarray(positions, dtype=np.int64)
        if positions.size and np.any(self.status[positions] > 0):
            raise ValueError("imputed points cannot revert to missing")
        status = self.status.copy()
        status[positions] = MISSING
        return TimeSeries(self.values.copy(), status, self.time_index)


@dataclass(frozen=True)
class SegmentView:
    """A length-``length`` window into ``parent`` starting at ``start``."""

    parent: TimeSeries
    start: int
    length: int

    def __post_init__(self):
        if self.length < 1 or self.start < 0 or self.start + self.length > len(self.parent):
            raise InvalidLengthError(
                f"window [{self.start}, {self.start + self.length}) outside series "
                f"of length {len(self.parent)}"
            )

    @property
    def stop(self) -> int:
        return self.start + self.length

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.start, self.stop)

    @property
    def values(self) -> np.ndarray:
        return self.parent.values[self.start:self.stop]

    @property
    def status(self) -> np.ndarray:
        return self.parent.status[self.start:self.stop]

    @property
    def missing(self) -> np.ndarray:
        return self.status == MISSING

    @property
    def n_missing(self) -> int:
        return int(np.count_nonzero(self.missing))

    @property
    def missing_rate(self) -> float:
        return self.n_missing / self.length

    @property
    def has_missing(self) -> bool:
        return self.n_missing > 0

    def known_values(self) -> np.ndarray:
        return self.values[~self.missing]

    def observed_values(self) -> np.ndarray:
        return self.values[self.status == OBSERVED]


def make_mask(series: TimeSeries) -> np.ndarray:
    """Binary mask: 0 at missing points, 1 at observed or imputed ones."""
    return (series.status != MISSING).astype(np.int8)


def segment_starts(t: int, L: int) -> np.ndarray:
    """Start offsets of the segments ``split`` produces for a length-``t`` series."""
    if L < 1 or L > t:
        raise InvalidLengthError(f"segment length must lie in [1, {t}], got {L}")
    n_full = t // L
    starts = np.arange(n_full) * L
    if t % L:
        starts = np.append(starts, t - L)
    return starts


def n_segments(t: int, L: int) -> int:
    """``t/L`` when L divides t, else ``floor(t/L) + 1``."""
    return t // L if t % L == 0 else math.floor(t / L) + 1


def split(series: TimeSeries, L: int) -> list[SegmentView]:
    """Cut ``series`` into consecutive length-``L`` segments.

    When ``L`` does not divide the length, the last segment is right-aligned
    so that it ends at the final point and overlaps its predecessor.
    """
    return [SegmentView(series, int(s), L) for s in segment_starts(len(series), L)]


@dataclass(frozen=True)
class NormalizationParams:
    center: float
    scale: float

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("scale must be a positive finite number")
        if not math.isfinite(self.center):
            raise ValueError("center must be finite")


def fit_normalization(series: TimeSeries) -> NormalizationParams:
    """Mean and population standard deviation of the observed values."""
    obs = series.observed_values()
    if obs.size < 2:
        raise DegenerateDataError("need at least two observed points to normalize")
    center = float(np.mean(obs))
    scale = float(np.sqrt(np.mean((obs - center) ** 2)))
    if scale <= 1e-12 * max(1.0, abs(center)):
        raise DegenerateDataError("observed values have zero variance")
    return NormalizationParams(center, scale)


def apply_normalization(series: TimeSeries, params: NormalizationParams) -> TimeSeries:
    return series.with_values((series.values - params.center) / params.scale)


def invert_normalization(series: TimeSeries, params: NormalizationParams) -> TimeSeries:
    return series.with_values(series.values * params.scale + params.center)
