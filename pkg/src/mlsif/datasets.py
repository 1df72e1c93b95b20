"""Synthetic seasonal series and a loader for the UCI air-quality CSV layout."""

from __future__ import annotations

import csv

import numpy as np

from .series import TimeSeries

UCI_MISSING = -200.0


def make_seasonal(n: int = 20000, period: int = 24, amplitude: float = 1.0,
                  slow_period: int = 24 * 30, slow_amplitude: float = 0.5,
                  trend: float = 0.0, noise: float = 0.2, skew: float = 0.5,
                  seed: int = 0) -> TimeSeries:
    """Daily cycle plus a slower cycle, linear trend and Gaussian noise.

    The sum is passed through ``(exp(skew * x) - 1) / skew`` so the marginal
    distribution is right-skewed like most concentration and level sensors;
    ``skew=0`` keeps it additive.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=float)
    phase = rng.uniform(0, 2 * np.pi)
    daily = np.sin(2 * np.pi * t / period + phase) + 0.4 * np.sin(4 * np.pi * t / period + 2 * phase)
    slow = np.sin(2 * np.pi * t / slow_period + rng.uniform(0, 2 * np.pi))
    x = amplitude * daily + slow_amplitude * slow + trend * t / n + noise * rng.standard_normal(n)
    if skew != 0.0:
        x = np.expm1(skew * x) / skew
    return TimeSeries(x, time_index=list(range(n)))


def make_donor_mask(n: int, rate: float, mean_gap_len: float, seed: int) -> np.ndarray:
    """0-at-missing mask with geometric-length gaps, for pattern transfer."""
    from .simulate import plan_large_gaps

    full = TimeSeries(np.zeros(n))
    plan = plan_large_gaps(full, rate, mean_gap_len, seed)
    return (~plan.mask()).astype(np.int8)


def load_uci_air_quality(path, column: str) -> TimeSeries:
    """Read one column of the UCI AirQuality CSV (``;`` separated, decimal commas, -200 = missing).

    Rows are indexed 0..n-1; the file's day-first date and dotted time are not ISO-8601.
    """
    values = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=";")
        header = [h.strip() for h in next(reader)]
        if column not in header:
            raise ValueError(f"column {column!r} not in {header}")
        ci, di = header.index(column), header.index("Date")
        for row in reader:
            if len(row) <= ci or not row[di].strip():
                continue
            cell = row[ci].strip().replace(",", ".")
            v = float(cell) if cell else np.nan
            values.append(np.nan if v == UCI_MISSING else v)
    return TimeSeries(np.array(values), time_index=list(range(len(values))))
