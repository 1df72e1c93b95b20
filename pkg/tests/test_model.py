import numpy as np
import pytest

from mlsif.model import FORMAT_VERSION, WindowModel

import oracles


def _probe(rng, L=7, H=5, B=3):
    m = WindowModel(L, H, seed=11)
    V = rng.normal(size=(B, L))
    K = rng.random((B, L)) < 0.7
    return m, V, K, rng.normal(size=(B, L))


def test_forward_shape_and_determinism(rng):
    m, V, K, _ = _probe(rng)
    a = m.predict(V, K)
    assert a.shape == V.shape
    assert np.array_equal(a, WindowModel(7, 5, seed=11).predict(V, K))


def test_unknown_values_do_not_leak_into_features(rng):
    m, V, K, _ = _probe(rng)
    V2 = np.where(K, V, 1e6)
    assert np.allclose(m.predict(V, K), m.predict(V2, K))


def test_backward_matches_finite_difference(rng):
    m, V, K, W = _probe(rng)

    def obj():
        return float(np.sum(W * m.predict(V, K)))

    Y, cache = m.forward(m.features(np.where(K, V, 0.0), K))
    grads = m.backward(cache, W)
    for name in ("W1", "b1", "W2", "b2"):
        flat = m.params[name].ravel()
        for j in rng.choice(flat.size, size=min(6, flat.size), replace=False):
            def f(v, j=j):
                old = flat[j]
                flat[j] = v[0]
                out = obj()
                flat[j] = old
                return out
            fd = oracles.central_difference(f, [flat[j]])[0]
            assert grads[name].ravel()[j] == pytest.approx(fd, rel=1e-4, abs=1e-8)


def test_clipping_limits_sgd_step():
    m = WindowModel(4, 3, seed=0)
    before = m.flat_params().copy()
    grads = {k: np.full_like(v, 100.0) for k, v in m.params.items()}
    norm = m.apply_gradients(grads, 1.0, "sgd", clip_norm=5.0)
    assert norm > 5.0
    assert np.linalg.norm(m.flat_params() - before) == pytest.approx(5.0)


def test_adam_first_step_is_learning_rate_sized():
    m = WindowModel(4, 3, seed=0)
    before = m.flat_params().copy()
    grads = {k: np.full_like(v, 0.3) for k, v in m.params.items()}
    m.apply_gradients(grads, 0.01, "adam", clip_norm=0)
    assert np.allclose(before - m.flat_params(), 0.01, rtol=1e-5)


def test_non_finite_gradient_and_unknown_optimizer():
    m = WindowModel(4, 3)
    bad = {k: np.full_like(v, np.nan) for k, v in m.params.items()}
    with pytest.raises(FloatingPointError):
        m.apply_gradients(bad, 0.1)
    ok = {k: np.zeros_like(v) for k, v in m.params.items()}
    with pytest.raises(ValueError):
        m.apply_gradients(ok, 0.1, "lbfgs")


def test_flat_params_roundtrip():
    m = WindowModel(5, 4, seed=2)
    flat = m.flat_params()
    m2 = WindowModel(5, 4, seed=99)
    m2.set_flat_params(flat)
    assert np.array_equal(m2.flat_params(), flat)
    with pytest.raises(ValueError):
        m2.set_flat_params(flat[:-1])


def test_copy_is_independent():
    m = WindowModel(5, 4, seed=2)
    c = m.copy()
    c.params["b2"] += 1.0
    assert not np.array_equal(c.params["b2"], m.params["b2"])


def test_save_load_roundtrip(tmp_path, rng):
    m, V, K, _ = _probe(rng)
    m.epochs_trained = 7
    path = tmp_path / "m.npz"
    m.save(path)
    back = WindowModel.load(path)
    assert back.epochs_trained == 7
    assert np.array_equal(back.predict(V, K), m.predict(V, K))


def test_load_rejects_bad_files(tmp_path):
    m = WindowModel(3, 2)
    p = tmp_path / "v.npz"
    np.savez(p, format_version=FORMAT_VERSION + 1, length=3, hidden=2, epochs_trained=0, **m.params)
    with pytest.raises(ValueError, match="version"):
        WindowModel.load(p)
    params = dict(m.params)
    params["b1"] = np.full_like(params["b1"], np.inf)
    np.savez(p, format_version=FORMAT_VERSION, length=3, hidden=2, epochs_trained=0, **params)
    with pytest.raises(ValueError, match="non-finite"):
        WindowModel.load(p)
