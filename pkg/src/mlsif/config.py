"""Run configuration: YAML file, ``MLSIF_`` environment overrides and CLI flags.

Precedence, lowest first: built-in defaults, config file, environment,
command-line flags. Unknown keys are rejected at every level.

Environment variables name a key path with double underscores, for example
``MLSIF_TRAIN__ALPHA=0.5`` or ``MLSIF_SEED=7``. Values are parsed as YAML
scalars.
"""

from __future__ import annotations

import copy
import os
from typing import Any, Mapping, Optional

import yaml

from .framework import FrameworkConfig
from .imputers import ImputerSpec, TrainConfig

ENV_PREFIX = "MLSIF_"

DEFAULT_TEMPLATE = """\
# mlsif run configuration. Every key is optional; the values below are the defaults.

framework:
  base_length: 24         # l, increment of the segment length per selection attempt
  rate_threshold: 10.0    # r, segments are selected when below this missing percent
  max_stages: 500         # safety cap on the number of stages
  eval_window: null       # Local SIV segment length; null means base_length
  normalize: true         # train in z-score units of the observed values

imputer:
  kind: window            # window | mean | linear | spline
  hidden: 64              # hidden width of the window model

train:
  alpha: 0.98             # mixture weight of the SIV term
  lambda: 0.9             # weight of originally observed drops against imputed ones
  gamma: 0.2              # proportion of known values dropped per sample
  epochs: 30
  learning_rate: 0.001
  batch_size: 8
  optimizer: adam         # adam | sgd
  clip_norm: 5.0          # gradient-norm clipping threshold
  siv_gaps: false         # also score predictions at real gaps in the SIV term

seed: null                # null draws a seed and logs it

io:
  na_value: null          # extra sentinel marking missing cells, e.g. -200

experiment:
  design: alpha_sweep     # ablation | alpha_sweep | rate_sweep | baseline_compare
  seeds: [0, 1, 2, 3, 4]
  alphas: [0.0, 0.25, 0.5, 0.75, 0.8, 0.9, 0.95, 0.96, 0.97, 0.98, 0.99, 1.0]
  rates: [0.1, 0.2, 0.3, 0.4, 0.5]
  imputers: [mean, linear, spline, window, mlsif]
  missing_rate: 0.3       # used by ablation, alpha_sweep and baseline_compare
  mean_gap_len: 100       # mean length of simulated gaps
  output_dir: results
  dataset:
    kind: synthetic       # synthetic | csv | uci
    n: 5000
    period: 24
    skew: 0.5
    noise: 0.2
    trend: 0.0
    path: null            # csv / uci file
    column: null          # uci value column
    donor_column: null    # uci column whose missing pattern is transferred (ablation)
"""

DEFAULTS: dict = yaml.safe_load(DEFAULT_TEMPLATE)


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: Mapping, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, Mapping):
                raise ConfigError(f"config key {where!r} must be a mapping")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def _env_overrides(environ: Mapping[str, str]) -> dict:
    tree: dict = {}
    for name, raw in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        keys = name[len(ENV_PREFIX):].lower().split("__")
        node = tree
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = yaml.safe_load(raw) if raw != "" else None
    return tree


def load_config(path=None, environ: Optional[Mapping[str, str]] = None,
                overrides: Optional[Mapping] = None) -> dict:
    """Resolve the full configuration tree."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, Mapping):
            raise ConfigError(f"{path}: top level must be a mapping")
        cfg = _merge(cfg, data)
    cfg = _merge(cfg, _env_overrides(os.environ if environ is None else environ))
    if overrides:
        cfg = _merge(cfg, overrides)
    return cfg


def set_path(tree: dict, dotted: str, value: Any):
    node = tree
    *head, last = dotted.split(".")
    for k in head:
        node = node.setdefault(k, {})
    node[last] = value


def framework_config(cfg: Mapping, seed: int) -> FrameworkConfig:
    fw, tr, im = cfg["framework"], cfg["train"], cfg["imputer"]
    try:
        return FrameworkConfig(
            l=int(fw["base_length"]),
            r_percent=float(fw["rate_threshold"]),
            max_stages=int(fw["max_stages"]),
            eval_window=None if fw["eval_window"] is None else int(fw["eval_window"]),
            normalize=bool(fw["normalize"]),
            imputer=ImputerSpec(str(im["kind"]), int(im["hidden"])),
            train=TrainConfig(
                alpha=float(tr["alpha"]), lam=float(tr["lambda"]), gamma=float(tr["gamma"]),
                epochs=int(tr["epochs"]), learning_rate=float(tr["learning_rate"]),
                batch_size=int(tr["batch_size"]), optimizer=str(tr["optimizer"]),
                clip_norm=float(tr["clip_norm"]), siv_gaps=bool(tr["siv_gaps"]),
                seed=int(seed),
            ),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
