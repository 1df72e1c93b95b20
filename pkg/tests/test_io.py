import numpy as np
import pytest

from mlsif.io import (
    SeriesFileError,
    format_value,
    read_heldout,
    read_series,
    write_heldout,
    write_metric_report,
    write_provenance,
    write_series,
)
from mlsif.metrics import MetricReport
from mlsif.series import TimeSeries
from mlsif.simulate import HeldOut


def write(tmp_path, text, name="s.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_canonical_file_is_byte_stable(tmp_path):
    text = "timestamp,value\n0,1.5\n1,\n2,-0.1\n3,1e-300\n4,0.30000000000000004\n"
    src = write(tmp_path, text)
    out = tmp_path / "o.csv"
    write_series(read_series(src), out)
    assert out.read_text() == text


def test_noncanonical_numbers_normalize_then_stabilize(tmp_path):
    src = write(tmp_path, "timestamp,value\n0, 1.50\n1,2E0\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_series(read_series(src), a)
    write_series(read_series(a), b)
    assert a.read_text() == "timestamp,value\n0,1.5\n1,2.0\n"
    assert a.read_bytes() == b.read_bytes()


def test_random_values_roundtrip_exactly(tmp_path, rng):
    x = rng.normal(size=500) * 10.0 ** rng.integers(-8, 8, size=500)
    x[rng.random(500) < 0.2] = np.nan
    p = tmp_path / "r.csv"
    write_series(TimeSeries(x), p)
    back = read_series(p)
    assert np.array_equal(np.isnan(back.values), np.isnan(x))
    assert np.array_equal(back.values[~np.isnan(x)], x[~np.isnan(x)])


def test_iso_timestamps_and_sentinel(tmp_path):
    src = write(tmp_path, "timestamp,value\n2004-03-10T18:00:00,2.6\n2004-03-10T19:00:00,-200\n")
    s = read_series(src, na_value="-200")
    assert s.n_missing == 1 and s.time_index[0] == "2004-03-10T18:00:00"
    assert read_series(src).n_missing == 0


@pytest.mark.parametrize("body,line,what", [
    ("0,1\n0,2\n", 3, "does not increase"),
    ("0,1\nx,2\n", 3, "unparseable timestamp"),
    ("0,1\n1,abc\n", 3, "unparseable value"),
    ("0,1\n1,2,3\n", 3, "fields"),
    ("0,inf\n", 2, "non-finite"),
    ("0,1\n2004-01-01,2\n", 3, "mixed"),
])
def test_errors_name_the_line(tmp_path, body, line, what):
    src = write(tmp_path, "timestamp,value\n" + body)
    with pytest.raises(SeriesFileError, match=what) as ei:
        read_series(src)
    assert ei.value.line == line and f"line {line}" in str(ei.value)


def test_missing_column_and_empty(tmp_path):
    with pytest.raises(SeriesFileError, match="'value'"):
        read_series(write(tmp_path, "timestamp,x\n0,1\n"))
    with pytest.raises(SeriesFileError, match="empty"):
        read_series(write(tmp_path, ""))
    with pytest.raises(SeriesFileError, match="no data"):
        read_series(write(tmp_path, "timestamp,value\n"))


def test_provenance_sidecar(tmp_path):
    s = TimeSeries(np.array([1.0, 2.0, np.nan]), np.array([0, 2, -1]))
    p = tmp_path / "p.csv"
    write_provenance(s, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "index,timestamp,status,stage"
    assert lines[2].endswith(",2") and lines[3].split(",")[3] == ""


def test_heldout_roundtrip_by_timestamp(tmp_path):
    s = TimeSeries(np.array([1.0, np.nan, 3.0, np.nan]), time_index=["10", "20", "30", "40"])
    truth = HeldOut(np.array([1, 3]), np.array([2.0, 4.0]))
    p = tmp_path / "t.csv"
    write_heldout(s, truth, p)
    back = read_heldout(p, s)
    assert list(back.positions) == [1, 3] and list(back.values) == [2.0, 4.0]
    other = TimeSeries(np.ones(2), time_index=["10", "30"])
    with pytest.raises(SeriesFileError, match="not present"):
        read_heldout(p, other)


def test_metric_report_csv(tmp_path):
    p = tmp_path / "m.csv"
    write_metric_report(MetricReport(mse=0.5, global_siv=0.25), p)
    header, row = p.read_text().splitlines()
    cols = dict(zip(header.split(","), row.split(",")))
    assert cols["mse"] == "0.5" and cols["global_siv"] == "0.25" and cols["r2"] == ""


def test_format_value():
    assert format_value(float("nan")) == ""
    assert format_value(0.1) == "0.1"
