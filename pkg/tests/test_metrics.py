
import numpy as np
import pytest

from mlsif.metrics import (
    METRIC_NAMES,
    MetricReport,
    PairedEval,
    UndefinedMetricError,
    d2,
    evaluate,
    global_siv,
    local_siv,
    mae,
    mse,
    r2,
    rmae,
    rmse,
)
from mlsif.series import TimeSeries
from mlsif.stats import siv

import oracles


@pytest.fixture
def pair(rng):
    o = rng.normal(size=60)
    return o, o + rng.normal(scale=0.3, size=60)


def test_metrics_match_plain_python_oracles(pair):
    o, p = pair
    assert mse(o, p) == pytest.approx(oracles.mse(o, p), rel=1e-12)
    assert mae(o, p) == pytest.approx(oracles.mae(o, p), rel=1e-12)
    assert d2(o, p) == pytest.approx(oracles.d2(o, p), rel=1e-12)
    assert r2(o, p) == pytest.approx(oracles.r2(o, p), rel=1e-12)


def test_root_identities(pair):
    o, p = pair
    assert rmse(o, p) ** 2 == pytest.approx(mse(o, p), rel=1e-12)
    assert rmae(o, p) ** 2 == pytest.approx(mae(o, p), rel=1e-12)


def test_perfect_prediction(pair):
    o, _ = pair
    assert mse(o, o) == 0.0 and mae(o, o) == 0.0
    assert d2(o, o) == 1.0
    assert r2(o, o) == pytest.approx(1.0, abs=1e-15)


def test_d2_hand_case():
    assert d2([0.0, 2.0], [1.0, 1.0]) == 0.0


def test_r2_is_scale_and_shift_invariant(pair):
    o, p = pair
    assert r2(o, 3 * p - 7) == pytest.approx(r2(o, p), rel=1e-12)


def test_independent_prediction_r2_near_zero():
    g = np.random.default_rng(3)
    assert r2(g.normal(size=100_000), g.normal(size=100_000)) < 0.01


def test_undefined_cases():
    with pytest.raises(UndefinedMetricError):
        r2([1.0, 2.0], [3.0, 3.0])
    with pytest.raises(UndefinedMetricError):
        d2([1.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        PairedEval([1.0], [1.0, 2.0])


def _before_after(rng, t=120):
    x = rng.normal(size=t)
    x[10:25] = np.nan
    x[70:72] = np.nan
    before = TimeSeries(x)
    pos = np.flatnonzero(before.missing)
    after = before.with_imputations(pos, rng.normal(size=pos.size), 1)
    return before, after


def test_local_siv_with_full_window_equals_global(rng):
    before, after = _before_after(rng)
    assert local_siv(before, after, len(before)) == global_siv(before, after)


def test_global_siv_definition(rng):
    before, after = _before_after(rng)
    assert global_siv(before, after) == siv(before.observed_values(), after.values)


def test_local_siv_sums_segments(rng):
    before, after = _before_after(rng, t=96)
    want = 0.0
    for a in range(0, 96, 24):
        sl = slice(a, a + 24)
        ref = before.values[sl][before.observed[sl]]
        want += siv(ref, after.values[sl])
    assert local_siv(before, after, 24) == pytest.approx(want, rel=1e-12)


def test_local_siv_skips_segments_without_observed_points():
    x = np.arange(48, dtype=float)
    x[:24] = np.nan
    before = TimeSeries(x)
    after = before.with_imputations(np.arange(24), np.zeros(24), 1)
    assert local_siv(before, after, 24) == 0.0


def test_evaluate_reports_reasons_for_absent_metrics(rng):
    before, after = _before_after(rng)
    rep = evaluate(before=before, after=after, eval_window=24)
    assert rep.mse is None and "mse" in rep.reasons
    assert rep.global_siv is not None
    rep2 = evaluate([1.0, 2.0], [1.0, 2.0])
    assert rep2.mse == 0.0 and rep2.global_siv is None and "global_siv" in rep2.reasons


def test_report_record_roundtrip():
    rep = MetricReport(mse=0.5, d2=0.25)
    rec = rep.to_record()
    assert "mse=0.5" in rec and "r2=NA" in rec
    assert MetricReport.from_dict(rep.as_dict()).as_dict() == rep.as_dict()
    assert tuple(rep.as_dict()) == METRIC_NAMES
