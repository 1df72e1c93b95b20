"""Two-layer feed-forward window imputer.

Input per window of length ``L`` is ``[values * known, known, position]``
(``3L`` features, position scaled to ``[0, 1]``); output is one value per
position. Only outputs at unknown positions are used.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1
PARAM_NAMES = ("W1", "b1", "W2", "b2")


class WindowModel:
    def __init__(self, length: int, hidden: int = 64, seed=0):
        if length < 1 or hidden < 1:
            raise ValueError("length and hidden width must be positive")
        self.length = int(length)
        self.hidden = int(hidden)
        rng = np.random.default_rng(seed)
        n_in = 3 * self.length
        self.params = {
            "W1": rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_in, self.hidden)),
            "b1": np.zeros(self.hidden),
            "W2": rng.normal(0.0, 0.1 / np.sqrt(self.hidden), size=(self.hidden, self.length)),
            "b2": np.zeros(self.length),
        }
        self.epochs_trained = 0
        self._adam = None
        self._positions = np.linspace(0.0, 1.0, self.length) if self.length > 1 else np.zeros(1)

    def __repr__(self):
        return f"WindowModel(length={self.length}, hidden={self.hidden}, epochs={self.epochs_trained})"

    def features(self, values: np.ndarray, known: np.ndarray) -> np.ndarray:
        values = np.atleast_2d(values)
        known = np.atleast_2d(known)
        if values.shape[1] != self.length:
            raise ValueError(f"window length {values.shape[1]} != model length {self.length}")
        x = np.where(known, values, 0.0)
        pos = np.broadcast_to(self._positions, x.shape)
        return np.concatenate([x, known.astype(float), pos], axis=1)

    def forward(self, feats: np.ndarray):
        p = self.params
        h = np.tanh(feats @ p["W1"] + p["b1"])
        return h @ p["W2"] + p["b2"], (feats, h)

    def predict(self, values, known) -> np.ndarray:
        out, _ = self.forward(self.features(values, known))
        return out

    def backward(self, cache, d_out: np.ndarray) -> dict:
        feats, h = cache
        p = self.params
        grads = {"W2": h.T @ d_out, "b2": d_out.sum(axis=0)}
        dh = (d_out @ p["W2"].T) * (1.0 - h * h)
        grads["W1"] = feats.T @ dh
        grads["b1"] = dh.sum(axis=0)
        return grads

    def apply_gradients(self, grads: dict, learning_rate: float, optimizer: str = "adam", clip_norm: float = 5.0) -> float:
        """One descent update; returns the pre-clipping gradient norm."""
        norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
        if not np.isfinite(norm):
            raise FloatingPointError("non-finite gradient")
        scale = clip_norm / norm if clip_norm and norm > clip_norm else 1.0
        if optimizer == "sgd":
            for k in PARAM_NAMES:
                self.params[k] -= learning_rate * scale * grads[k]
        elif optimizer == "adam":
            if self._adam is None:
                self._adam = {"t": 0, "m": {k: np.zeros_like(v) for k, v in self.params.items()},
                              "v": {k: np.zeros_like(v) for k, v in self.params.items()}}
            st = self._adam
            st["t"] += 1
            b1, b2, eps = 0.9, 0.999, 1e-8
            for k in PARAM_NAMES:
                g = scale * grads[k]
                st["m"][k] = b1 * st["m"][k] + (1 - b1) * g
                st["v"][k] = b2 * st["v"][k] + (1 - b2) * g * g
                mhat = st["m"][k] / (1 - b1 ** st["t"])
                vhat = st["v"][k] / (1 - b2 ** st["t"])
                self.params[k] -= learning_rate * mhat / (np.sqrt(vhat) + eps)
        else:
            raise ValueError(f"unknown optimizer {optimizer!r}")
        return norm

    def flat_params(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in PARAM_NAMES])

    def set_flat_params(self, flat: np.ndarray):
        flat = np.asarray(flat, dtype=float)
        i = 0
        for k in PARAM_NAMES:
            n = self.params[k].size
            self.params[k] = flat[i:i + n].reshape(self.params[k].shape).copy()
            i += n
        if i != flat.size:
            raise ValueError("flat parameter vector has the wrong size")

    def copy(self) -> "WindowModel":
        m = WindowModel.__new__(WindowModel)
        m.length, m.hidden, m.epochs_trained = self.length, self.hidden, self.epochs_trained
        m.params = {k: v.copy() for k, v in self.params.items()}
        m._adam = None
        m._positions = self._positions
        return m

    # Versioned flat record: the stage k+1 model can warm-start from stage k.

    def save(self, path):
        buf = io.BytesIO()
        np.savez(buf, format_version=FORMAT_VERSION, length=self.length, hidden=self.hidden,
                 epochs_trained=self.epochs_trained, **self.params)
        Path(path).write_bytes(buf.getvalue())

    @classmethod
    def load(cls, path) -> "WindowModel":
        with np.load(path) as data:
            version = int(data["format_version"])
            if version != FORMAT_VERSION:
                raise ValueError(f"unsupported model format version {version}")
            m = cls(int(data["length"]), int(data["hidden"]))
            for k in PARAM_NAMES:
                m.params[k] = data[k].astype(float)
            m.epochs_trained = int(data["epochs_trained"])
        if not all(np.all(np.isfinite(v)) for v in m.params.values()):
            raise ValueError("model file contains non-finite parameters")
        return m
