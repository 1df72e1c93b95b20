import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from mlsif import MLSIFImputer

from conftest import toy_series


def test_params_roundtrip_and_clone():
    est = MLSIFImputer(alpha=0.5, epochs=2)
    params = est.get_params()
    assert params["alpha"] == 0.5 and params["base_length"] == 24
    est.set_params(gamma=0.3)
    c = clone(est)
    assert c.get_params() == est.get_params() and c is not est


def test_transform_before_fit():
    with pytest.raises(NotFittedError):
        MLSIFImputer().transform(np.ones(3))


@pytest.mark.parametrize("bad", [np.ones((4, 2)), np.array([1.0, np.inf, 2.0])])
def test_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        MLSIFImputer().fit(bad)


def test_fit_transform_records_stage_details():
    x = toy_series().values
    est = MLSIFImputer(epochs=2, random_state=3)
    out = est.fit_transform(x)
    assert not np.isnan(out).any()
    observed = ~np.isnan(x)
    assert np.array_equal(out[observed], x[observed])
    assert est.n_stages_ == len(est.stage_reports_) == 2
    assert set(np.unique(est.status_)) == {0, 1, 2}


def test_deterministic_and_in_pipeline():
    x = toy_series().values
    a = MLSIFImputer(epochs=2, random_state=1).fit_transform(x)
    pipe = make_pipeline(FunctionTransformer(lambda v: v.reshape(-1, 1)),
                         MLSIFImputer(epochs=2, random_state=1))
    b = pipe.fit_transform(x)
    assert np.array_equal(a, b[:, 0])
