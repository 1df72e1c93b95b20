"""Mean, spread, rooted skewness and rooted kurtosis, and the SIV distance."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np

# Below this spread the standardized moments are 0/0; S and K are set to 0.
SIGMA_FLOOR = 1e-12
# The cube root amplifies rounding error near zero; below this |m3| the third
# moment is recomputed in exact rational arithmetic.
_EXACT_M3_BELOW = 1e-4


class StatIndexes(NamedTuple):
    mu: float
    sigma: float
    skew_root: float
    kurt_root: float


def _as_multiset(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("statistical indexes need at least one value")
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must be finite")
    return arr


def compute_indexes(values) -> StatIndexes:
    """Population moments of ``values``.

    ``skew_root`` is the signed cube root of the third standardized moment and
    ``kurt_root`` the fourth root of the fourth, so a Gaussian sample has
    ``kurt_root`` close to ``3 ** 0.25``.
    """
    x = _as_multiset(values)
    n = x.size
    mu = math.fsum(x) / n
    d = x - mu
    sigma = float(np.sqrt(np.sum(d * d) / n))
    if sigma < SIGMA_FLOOR:
        return StatIndexes(mu, sigma, 0.0, 0.0)
    z = d / sigma
    z2 = z * z
    m3 = float(np.sum(z2 * z) / n)
    m4 = float(np.sum(z2 * z2) / n)
    if abs(m3) < _EXACT_M3_BELOW:
        m3 = _exact_third_moment(x)
    return StatIndexes(mu, sigma, float(np.cbrt(m3)), float(m4 ** 0.25))


def _exact_third_moment(x: np.ndarray) -> float:
    xs = [Fraction(float(v)) for v in x]
    n = len(xs)
    mean = sum(xs) / n
    devs = [v - mean for v in xs]
    m2 = sum(d * d for d in devs) / n
    m3 = sum(d * d * d for d in devs) / n
    if m3 == 0:
        return 0.0
    return float(m3) / float(m2) ** 1.5


def siv_from_indexes(a: StatIndexes, b: StatIndexes) -> float:
    return float(
        (a.mu - b.mu) ** 2
        + (a.sigma - b.sigma) ** 2
        + (a.skew_root - b.skew_root) ** 2
        + (a.kurt_root - b.kurt_root) ** 2
    )


def siv(a, b) -> float:
    """Sum of squared differences of the four indexes of two multisets.

    The multisets may have different sizes.
    """
    return siv_from_indexes(compute_indexes(a), compute_indexes(b))


def siv_imputation(observed, completed) -> float:
    """SIV between the observed values and the same sequence after imputation."""
    return siv(observed, completed)
