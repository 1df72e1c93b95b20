"""Multistage imputation of univariate sensor series."""

from .framework import FrameworkConfig, MLSIFImputer, run, run_stage, select_samples
from .imputers import ImputerSpec, TrainConfig
from .series import MISSING, OBSERVED, TimeSeries, make_mask, split
from .stats import compute_indexes, siv

__all__ = [
    "FrameworkConfig", "ImputerSpec", "MISSING", "MLSIFImputer", "OBSERVED",
    "TimeSeries", "TrainConfig", "compute_indexes", "make_mask", "run",
    "run_stage", "select_samples", "siv", "split",
]

__version__ = "0.1.0"
