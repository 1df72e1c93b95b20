"""Missing-pattern simulation: clustered large gaps and pattern transfer."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .series import MISSING, OBSERVED, TimeSeries

RATE_TOLERANCE = 0.005


class UnreachableRateError(ValueError):
    pass


class HeldOut(NamedTuple):
    """Ground truth removed from a series: absolute positions and values."""

    positions: np.ndarray
    values: np.ndarray


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(a), int(b - a)) for a, b in zip(edges[::2], edges[1::2])]


@dataclass(frozen=True)
class GapPlan:
    intervals: tuple  # ((start, length), ...), sorted and disjoint
    target_rate: float
    seed: int
    t: int

    def mask(self) -> np.ndarray:
        m = np.zeros(self.t, dtype=bool)
        for start, length in self.intervals:
            m[start:start + length] = True
        return m

    @property
    def achieved_rate(self) -> float:
        return sum(n for _, n in self.intervals) / self.t

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["start", "length"])
            w.writerows(self.intervals)

    @classmethod
    def from_csv(cls, path, t: int, target_rate: float = float("nan"), seed: int = -1) -> "GapPlan":
        with open(path, newline="") as fh:
            rows = [(int(r["start"]), int(r["length"])) for r in csv.DictReader(fh)]
        for start, length in rows:
            if start < 0 or length < 1 or start + length > t:
                raise ValueError(f"interval ({start}, {length}) outside [0, {t})")
        return cls(tuple(sorted(rows)), target_rate, seed, t)


def plan_large_gaps(series: TimeSeries, target_rate: float, mean_gap_len: float, seed: int) -> GapPlan:
    """Remove clustered runs of observed points until ``target_rate`` of the series is gone.

    Gap centres are uniform over the series and gap lengths geometric with
    mean ``mean_gap_len`` (minimum 1). The final gap is trimmed so the
    removed count equals ``round(target_rate * t)``.
    """
    t = len(series)
    if not 0.0 <= target_rate < 1.0:
        raise ValueError("target_rate must lie in [0, 1)")
    if mean_gap_len < 1:
        raise ValueError("mean_gap_len must be >= 1")
    goal = int(round(target_rate * t))
    observed = series.observed
    if goal > np.count_nonzero(observed):
        raise UnreachableRateError(
            f"target {target_rate:.3f} needs {goal} points but only "
            f"{np.count_nonzero(observed)} are observed"
        )
    removed = np.zeros(t, dtype=bool)
    rng = np.random.default_rng(seed)
    count = 0
    p = 1.0 / mean_gap_len
    while count < goal:
        length = int(rng.geometric(p))
        centre = int(rng.integers(0, t))
        start = max(0, centre - length // 2)
        stop = min(t, start + length)
        new = np.flatnonzero(observed[start:stop] & ~removed[start:stop]) + start
        new = new[: goal - count]
        removed[new] = True
        count += new.size
    return GapPlan(tuple(_runs(removed)), float(target_rate), int(seed), t)


def apply_gap_plan(series: TimeSeries, plan: GapPlan):
    """Mark the plan's points missing. Returns ``(masked, HeldOut)``."""
    if plan.t != len(series):
        raise ValueError("plan length does not match the series")
    m = plan.mask() & series.observed
    pos = np.flatnonzero(m)
    return series.with_missing(pos), HeldOut(pos, series.values[pos].copy())


def transfer_pattern(donor_mask, recipient: TimeSeries):
    """Copy a donor's missing positions onto ``recipient``.

    ``donor_mask`` follows the 0-at-missing convention. Returns
    ``(masked recipient, HeldOut)`` where the held-out truth covers the
    recipient's observed points that were removed.
    """
    donor = np.asarray(donor_mask).ravel()
    if donor.size != len(recipient):
        raise ValueError(f"donor mask length {donor.size} != recipient length {len(recipient)}")
    drop = (donor == 0) & recipient.observed
    pos = np.flatnonzero(drop)
    masked = recipient.with_missing(np.flatnonzero((donor == 0) & ~recipient.missing))
    return masked, HeldOut(pos, recipient.values[pos].copy())


def restore(masked: TimeSeries, truth: HeldOut) -> TimeSeries:
    """Put held-out values back as observed points."""
    values = masked.values.copy()
    status = masked.status.copy()
    pos = np.asarray(truth.positions, dtype=np.int64)
    if pos.size and not np.all(status[pos] == MISSING):
        raise ValueError("held-out positions must be missing in the masked series")
    values[pos] = truth.values
    status[pos] = OBSERVED
    return TimeSeries(values, status, masked.time_index)


def run_lengths(mask) -> np.ndarray:
    """Lengths of the runs of zeros in a 0-at-missing mask, in order."""
    m = np.asarray(mask).ravel() == 0
    return np.array([n for _, n in _runs(m)], dtype=np.int64)
