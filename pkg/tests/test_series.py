import numpy as np
import pytest

from mlsif.series import (
    MISSING,
    OBSERVED,
    DegenerateDataError,
    InvalidLengthError,
    SegmentView,
    TimeSeries,
    apply_normalization,
    fit_normalization,
    invert_normalization,
    make_mask,
    n_segments,
    segment_starts,
    split,
    status_label,
)

import oracles


def test_nan_marks_missing_and_mask_is_zero_there():
    s = TimeSeries([1.0, np.nan, 3.0])
    assert list(s.status) == [OBSERVED, MISSING, OBSERVED]
    assert list(make_mask(s)) == [1, 0, 1]
    assert s.n_missing == 1 and s.missing_rate == pytest.approx(1 / 3)


def test_arrays_are_read_only():
    s = TimeSeries([1.0, 2.0])
    with pytest.raises(ValueError):
        s.values[0] = 5.0


def test_status_codes_and_labels():
    assert status_label(OBSERVED) == "observed"
    assert status_label(MISSING) == "missing"
    assert status_label(3).startswith("imputed")


def test_with_imputations_only_fills_missing():
    s = TimeSeries([1.0, np.nan, np.nan])
    out = s.with_imputations([1], [9.0], stage=2)
    assert out.values[1] == 9.0 and out.status[1] == 2
    assert out.status[2] == MISSING
    with pytest.raises(ValueError):
        s.with_imputations([0], [9.0], stage=1)
    with pytest.raises(ValueError):
        s.with_imputations([1], [np.inf], stage=1)


def test_with_missing_cannot_revert_imputed():
    s = TimeSeries([1.0, np.nan]).with_imputations([1], [2.0], 1)
    with pytest.raises(ValueError):
        s.with_missing([1])
    assert s.with_missing([0]).status[0] == MISSING


@pytest.mark.parametrize("t,L", [(240, 24), (10, 4), (7, 7), (100, 3), (5, 1), (1000, 150)])
def test_segment_starts_match_ceiling_rule(t, L):
    assert list(segment_starts(t, L)) == oracles.segment_starts(t, L)
    assert n_segments(t, L) == len(oracles.segment_starts(t, L))


def test_toy_split_has_ten_pieces():
    assert n_segments(240, 24) == 10


def test_t10_L4_last_segment_right_aligned():
    assert list(segment_starts(10, 4)) == [0, 4, 6]


def test_segment_length_errors():
    with pytest.raises(InvalidLengthError):
        segment_starts(5, 6)
    with pytest.raises(InvalidLengthError):
        segment_starts(5, 0)


def test_segment_view_reflects_parent(toy):
    segs = split(toy, 24)
    assert [s.start for s in segs] == list(range(0, 240, 24))
    second = segs[1]
    assert isinstance(second, SegmentView)
    assert second.n_missing == 3 and second.missing_rate == pytest.approx(3 / 24)
    assert np.array_equal(second.positions, np.arange(24, 48))


def test_normalization_roundtrip_restores_observed_bits(rng):
    x = rng.normal(5, 3, 200)
    x[rng.choice(200, 30, replace=False)] = np.nan
    s = TimeSeries(x)
    p = fit_normalization(s)
    z = apply_normalization(s, p)
    assert abs(np.mean(z.observed_values())) < 1e-12
    assert np.std(z.observed_values()) == pytest.approx(1.0)
    back = invert_normalization(z, p)
    assert np.allclose(back.observed_values(), s.observed_values(), rtol=0, atol=1e-12)


def test_normalization_degenerate():
    with pytest.raises(DegenerateDataError):
        fit_normalization(TimeSeries([2.0, 2.0, np.nan]))
    with pytest.raises(DegenerateDataError):
        fit_normalization(TimeSeries([2.0, np.nan]))
