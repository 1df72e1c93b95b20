"""Experiment drivers: ablation grid, alpha sweep, missing-rate sweep, baseline comparison.

Every cell is scored against held-out truth and the pre-imputation series,
in the z-score units of the masked series' observed values, so numbers are
comparable across datasets. Outputs are deterministic given the spec.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .datasets import load_uci_air_quality, make_donor_mask, make_seasonal
from .framework import FrameworkConfig, run, one_stage_impute
from .io import read_series, write_rows
from .metrics import METRIC_NAMES, MetricReport, evaluate
from .series import TimeSeries, apply_normalization, fit_normalization
from .simulate import HeldOut, apply_gap_plan, plan_large_gaps, transfer_pattern

logger = logging.getLogger(__name__)

DESIGNS = ("ablation", "alpha_sweep", "rate_sweep", "baseline_compare")
ALPHA_GRID = (0.0, 0.25, 0.5, 0.75, 0.8, 0.9, 0.95, 0.96, 0.97, 0.98, 0.99, 1.0)
RATE_GRID = (0.1, 0.2, 0.3, 0.4, 0.5)
METHODS = ("mean", "linear", "spline", "window", "mlsif")
ABLATION_CELLS = ("OFOS", "OFWS", "WFOS", "WFWS")
ABLATION_METRICS = ("mse", "mae", "r2", "d2", "global_siv", "local_siv")


@dataclass
class DatasetSpec:
    kind: str = "synthetic"
    n: int = 5000
    period: int = 24
    skew: float = 0.5
    noise: float = 0.2
    trend: float = 0.0
    path: Optional[str] = None
    column: Optional[str] = None
    donor_column: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("synthetic", "csv", "uci"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.kind != "synthetic" and not self.path:
            raise ValueError(f"dataset kind {self.kind!r} needs a path")
        if self.kind == "uci" and not self.column:
            raise ValueError("uci dataset needs a column")

    def load(self, seed: int) -> TimeSeries:
        """The series for one seed; only synthetic data varies with the seed."""
        if self.kind == "synthetic":
            return make_seasonal(self.n, period=self.period, skew=self.skew, noise=self.noise,
                                 trend=self.trend, seed=seed)
        if self.kind == "csv":
            return read_series(self.path)
        return load_uci_air_quality(self.path, self.column)

    def donor_mask(self, seed: int, rate: float, mean_gap_len: float, t: int) -> np.ndarray:
        if self.kind == "uci" and self.donor_column:
            donor = load_uci_air_quality(self.path, self.donor_column)
            return donor.observed.astype(np.int8)
        # Different stream from the data and plan seeds.
        return make_donor_mask(t, rate, mean_gap_len, seed=10_000 + seed)


@dataclass
class ExperimentSpec:
    design: str
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    framework: FrameworkConfig = field(default_factory=FrameworkConfig)
    seeds: tuple = (0, 1, 2, 3, 4)
    alphas: tuple = ALPHA_GRID
    rates: tuple = RATE_GRID
    imputers: tuple = METHODS
    missing_rate: float = 0.3
    mean_gap_len: float = 100.0
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"design must be one of {DESIGNS}, got {self.design!r}")
        self.seeds = tuple(int(s) for s in self.seeds)
        self.alphas = tuple(float(a) for a in self.alphas)
        self.rates = tuple(float(r) for r in self.rates)
        self.imputers = tuple(self.imputers)
        if not self.seeds:
            raise ValueError("at least one seed is required")
        grid = {"alpha_sweep": self.alphas, "rate_sweep": self.rates,
                "baseline_compare": self.imputers}.get(self.design, (0,))
        if not grid:
            raise ValueError(f"{self.design} needs a nonempty grid")
        bad = set(self.imputers) - set(METHODS)
        if bad:
            raise ValueError(f"unknown imputers {sorted(bad)}; choose from {METHODS}")

    def as_dict(self) -> dict:
        fw = self.framework
        return {
            "design": self.design,
            "dataset": vars(self.dataset).copy(),
            "framework": {
                "l": fw.l, "r_percent": fw.r_percent, "max_stages": fw.max_stages,
                "eval_window": fw.window, "normalize": fw.normalize,
                "imputer": vars(fw.imputer).copy(),
                "train": {k: v for k, v in vars(fw.train).items() if k != "seed"},
            },
            "seeds": list(self.seeds), "alphas": list(self.alphas), "rates": list(self.rates),
            "imputers": list(self.imputers), "missing_rate": self.missing_rate,
            "mean_gap_len": self.mean_gap_len,
        }


@dataclass
class Cell:
    design: str
    method: str
    x: Optional[float]
    seed: int
    report: MetricReport
    n_stages: Optional[int] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def as_row(self) -> dict:
        row = {"design": self.design, "method": self.method, "x": self.x, "seed": self.seed,
               "status": "ok" if self.ok else "failed", "n_stages": self.n_stages}
        row.update(self.report.as_dict())
        row["error"] = self.error
        return row


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    cells: list

    @property
    def failed(self) -> list:
        return [c for c in self.cells if not c.ok]

    def metric(self, name: str, method: str, x=None, seed=None) -> list:
        return [getattr(c.report, name) for c in self.cells
                if c.method == method and (x is None or c.x == x) and (seed is None or c.seed == seed)]

    def table(self) -> list[dict]:
        """Seed-averaged metrics per (method, x), failed cells excluded."""
        keys = []
        for c in self.cells:
            if (c.method, c.x) not in keys:
                keys.append((c.method, c.x))
        rows = []
        for method, x in keys:
            cells = [c for c in self.cells if c.method == method and c.x == x]
            good = [c for c in cells if c.ok]
            row = {"method": method, "x": x, "n_seeds": len(good), "n_failed": len(cells) - len(good)}
            for name in METRIC_NAMES:
                vals = [getattr(c.report, name) for c in good if getattr(c.report, name) is not None]
                row[name] = float(np.mean(vals)) if vals else None
            rows.append(row)
        return rows


# Data preparation


def _masked_random(spec: ExperimentSpec, seed: int, rate: float):
    full = spec.dataset.load(seed)
    if rate == 0.0:
        return full, HeldOut(np.zeros(0, dtype=np.int64), np.zeros(0))
    plan = plan_large_gaps(full, rate, spec.mean_gap_len, seed)
    return apply_gap_plan(full, plan)


def _masked_transfer(spec: ExperimentSpec, seed: int):
    full = spec.dataset.load(seed)
    donor = spec.dataset.donor_mask(seed, spec.missing_rate, spec.mean_gap_len, len(full))
    return transfer_pattern(donor, full)


# Cells


def _impute(method: str, masked: TimeSeries, fw: FrameworkConfig):
    """Completed series and stage count for one method."""
    if masked.is_complete:
        return masked, 0
    if method in ("mean", "linear", "spline"):
        spec = replace(fw.imputer, kind=method)
        return one_stage_impute(masked, len(masked), spec, fw.train, fw.normalize), 1
    if method == "window":
        spec = replace(fw.imputer, kind="window")
        return one_stage_impute(masked, fw.l, spec, fw.train, fw.normalize), 1
    if method == "mlsif":
        completed, reports = run(masked, fw)
        return completed, len(reports)
    raise ValueError(f"unknown method {method!r}")


def score(masked: TimeSeries, truth: HeldOut, completed: TimeSeries, eval_window: int) -> MetricReport:
    """All metrics in z-score units of ``masked``'s observed values."""
    if masked.is_complete:
        return evaluate(before=masked, after=completed, eval_window=eval_window)
    p = fit_normalization(masked)
    before = apply_normalization(masked, p)
    after = apply_normalization(completed, p)
    pos = np.asarray(truth.positions, dtype=np.int64)
    t_z = (np.asarray(truth.values) - p.center) / p.scale
    return evaluate(t_z, after.values[pos], before, after, eval_window)


def run_cell(design: str, method: str, x, seed: int, masked: TimeSeries, truth: HeldOut,
             fw: FrameworkConfig) -> Cell:
    fw = replace(fw, train=replace(fw.train, seed=seed))
    try:
        completed, n_stages = _impute(method, masked, fw)
        report = score(masked, truth, completed, fw.window)
        cell = Cell(design, method, x, seed, report, n_stages)
    except Exception as exc:  # a failed cell is recorded, not fatal
        logger.error("cell %s/%s x=%s seed=%d failed: %s", design, method, x, seed, exc)
        cell = Cell(design, method, x, seed, MetricReport(), error=f"{type(exc).__name__}: {exc}")
    logger.info("cell %s/%s x=%s seed=%d done", design, method, x, seed)
    return cell


def _with_alpha(fw: FrameworkConfig, alpha: float) -> FrameworkConfig:
    return replace(fw, train=replace(fw.train, alpha=alpha))


def run_ablation(spec: ExperimentSpec, progress: Optional[Callable] = None) -> ExperimentResult:
    """OFOS / OFWS / WFOS / WFWS on a transferred missing pattern.

    "OF" is a single pass of the window model at ``L = l`` over every
    segment, "WF" the multistage framework. "OS" trains with MSE only
    (alpha 0), "WS" with the configured mixture.
    """
    cells = []
    fw = replace(spec.framework, imputer=replace(spec.framework.imputer, kind="window"))
    for seed in spec.seeds:
        masked, truth = _masked_transfer(spec, seed)
        for name in ABLATION_CELLS:
            cfg = fw if name.endswith("WS") else _with_alpha(fw, 0.0)
            method = "mlsif" if name.startswith("WF") else "window"
            cell = run_cell("ablation", method, None, seed, masked, truth, cfg)
            cell.method = name
            cells.append(cell)
            if progress:
                progress(cell)
    return ExperimentResult(spec, cells)


def run_alpha_sweep(spec: ExperimentSpec, progress: Optional[Callable] = None) -> ExperimentResult:
    cells = []
    for seed in spec.seeds:
        masked, truth = _masked_random(spec, seed, spec.missing_rate)
        for a in spec.alphas:
            cells.append(run_cell("alpha_sweep", "mlsif", a, seed, masked, truth,
                                  _with_alpha(spec.framework, a)))
            if progress:
                progress(cells[-1])
    return ExperimentResult(spec, cells)


def run_rate_sweep(spec: ExperimentSpec, progress: Optional[Callable] = None) -> ExperimentResult:
    cells = []
    for seed in spec.seeds:
        for rate in spec.rates:
            masked, truth = _masked_random(spec, seed, rate)
            for method in spec.imputers:
                cells.append(run_cell("rate_sweep", method, rate, seed, masked, truth, spec.framework))
                if progress:
                    progress(cells[-1])
    return ExperimentResult(spec, cells)


def run_baseline_compare(spec: ExperimentSpec, progress: Optional[Callable] = None) -> ExperimentResult:
    """Every imputer at the single rate ``spec.missing_rate``."""
    return run_rate_sweep(replace(spec, design="baseline_compare", rates=(spec.missing_rate,)), progress)


RUNNERS = {
    "ablation": run_ablation,
    "alpha_sweep": run_alpha_sweep,
    "rate_sweep": run_rate_sweep,
    "baseline_compare": run_baseline_compare,
}


def run_experiment(spec: ExperimentSpec, progress: Optional[Callable] = None) -> ExperimentResult:
    return RUNNERS[spec.design](spec, progress)


# Outputs

CELL_COLUMNS = ("design", "method", "x", "seed", "status", "n_stages") + METRIC_NAMES + ("error",)


def long_rows(result: ExperimentResult) -> list[dict]:
    """Plot-ready rows: one per (cell, metric) with a value."""
    rows = []
    for c in result.cells:
        for name in METRIC_NAMES:
            v = getattr(c.report, name)
            if v is not None:
                rows.append({"x": c.x, "metric": name, "method": c.method, "seed": c.seed, "value": v})
    return rows


def rate_table_rows(result: ExperimentResult) -> list[dict]:
    """Methods as rows, ``<rate>_mse`` / ``<rate>_siv`` columns, seed means."""
    table = result.table()
    out = []
    for method in dict.fromkeys(r["method"] for r in table):
        row = {"method": method}
        for r in table:
            if r["method"] == method:
                tag = f"{r['x']:g}"
                row[f"{tag}_mse"] = r["mse"]
                row[f"{tag}_siv"] = r["global_siv"]
        out.append(row)
    return out


def ablation_rows(result: ExperimentResult) -> list[dict]:
    """Ablation layout: one row per case, six metric columns, seed means."""
    return [{"case": r["method"], **{m: r[m] for m in ABLATION_METRICS}} for r in result.table()]


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_outputs(result: ExperimentResult, out_dir) -> Path:
    """Write the CSV outputs of the design plus manifest.json. Returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "cells.csv": ([c.as_row() for c in result.cells], CELL_COLUMNS),
        "long.csv": (long_rows(result), ("x", "metric", "method", "seed", "value")),
        "table.csv": (result.table(), ("method", "x", "n_seeds", "n_failed") + METRIC_NAMES),
    }
    if result.spec.design in ("rate_sweep", "baseline_compare"):
        rows = rate_table_rows(result)
        cols = list(rows[0].keys()) if rows else ["method"]
        files["rate_table.csv"] = (rows, cols)
    if result.spec.design == "ablation":
        files["ablation.csv"] = (ablation_rows(result), ("case",) + ABLATION_METRICS)
    for name, (rows, cols) in files.items():
        write_rows(rows, out / name, cols)
    manifest = {
        "version": __version__,
        "spec": result.spec.as_dict(),
        "n_cells": len(result.cells),
        "n_failed": len(result.failed),
        "files": {name: _sha256(out / name) for name in sorted(files)},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def spec_from_config(cfg: dict, fw: FrameworkConfig, design: Optional[str] = None,
                     seeds: Optional[Sequence[int]] = None) -> ExperimentSpec:
    ex = cfg["experiment"]
    return ExperimentSpec(
        design=design or ex["design"],
        dataset=DatasetSpec(**ex["dataset"]),
        framework=fw,
        seeds=tuple(seeds if seeds is not None else ex["seeds"]),
        alphas=tuple(ex["alphas"]),
        rates=tuple(ex["rates"]),
        imputers=tuple(ex["imputers"]),
        missing_rate=float(ex["missing_rate"]),
        mean_gap_len=float(ex["mean_gap_len"]),
        output_dir=ex["output_dir"],
    )
