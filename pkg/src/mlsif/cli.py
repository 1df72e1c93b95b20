"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 incomplete imputation,
3 internal failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULT_TEMPLATE, ENV_PREFIX, framework_config, load_config, set_path
from .framework import IncompleteResultError, run
from .harness import ExperimentSpec, run_experiment, spec_from_config, write_outputs
from .io import (
    read_heldout,
    read_series,
    write_heldout,
    write_metric_report,
    write_provenance,
    write_rows,
    write_series,
)
from .metrics import evaluate
from .series import MISSING, apply_normalization, fit_normalization
from .simulate import apply_gap_plan, plan_large_gaps, restore, transfer_pattern

log = logging.getLogger("mlsif")

EXIT_OK, EXIT_USAGE, EXIT_INCOMPLETE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# Flags that map onto config keys.
_OVERRIDES = {
    "alpha": "train.alpha",
    "lam": "train.lambda",
    "gamma": "train.gamma",
    "epochs": "train.epochs",
    "rate_threshold": "framework.rate_threshold",
    "base_length": "framework.base_length",
    "imputer": "imputer.kind",
    "max_stages": "framework.max_stages",
    "eval_window": "framework.eval_window",
    "na_value": "io.na_value",
}


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--seed", type=int, help="seed for every random draw (logged when absent)")
    p.add_argument("--na-value", help="extra sentinel marking missing cells, e.g. -200")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _add_framework(p: argparse.ArgumentParser):
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--rate-threshold", type=float, help="r, in percent")
    p.add_argument("--base-length", type=int, help="l, segment length increment")
    p.add_argument("--imputer", choices=["window", "mean", "linear", "spline"])
    p.add_argument("--max-stages", type=int)
    p.add_argument("--eval-window", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlsif", description="Multistage time-series imputation toolkit.")
    parser.add_argument("--version", action="version", version=f"mlsif {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("impute", help="fill every missing point of a series file")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--provenance", help="sidecar path (default: <output>.provenance.csv)")
    p.add_argument("--stages", help="write per-stage reports to this CSV")
    _add_common(p)
    _add_framework(p)

    p = sub.add_parser("evaluate", help="score an imputed series against ground truth")
    p.add_argument("truth", help="complete original series or held-out truth file")
    p.add_argument("imputed")
    p.add_argument("--masked", help="pre-imputation series; enables Global/Local SIV")
    p.add_argument("--normalize", action="store_true",
                   help="score in z-score units of the masked series' observed values")
    p.add_argument("-o", "--output", help="metric CSV")
    _add_common(p)
    p.add_argument("--eval-window", type=int)

    p = sub.add_parser("simulate", help="remove points to create an evaluation pattern")
    p.add_argument("input")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--rate", type=float, help="target global missing rate in [0, 1)")
    g.add_argument("--donor", help="series file whose missing positions are copied")
    p.add_argument("--mean-gap-len", type=float, default=100.0)
    p.add_argument("--masked", required=True, help="output: masked series")
    p.add_argument("--truth", required=True, help="output: held-out values")
    p.add_argument("--plan", help="output: gap plan CSV (rate mode)")
    _add_common(p)

    p = sub.add_parser("restore", help="put held-out values back into a masked series")
    p.add_argument("masked")
    p.add_argument("truth")
    p.add_argument("-o", "--output", required=True)
    _add_common(p)

    p = sub.add_parser("experiment", help="run an experiment design from the config")
    p.add_argument("--design", choices=["ablation", "alpha_sweep", "rate_sweep", "baseline_compare"])
    p.add_argument("--seeds", type=int, nargs="+", help="override the experiment seeds")
    p.add_argument("-o", "--output", help="output directory")
    _add_common(p)
    _add_framework(p)

    p = sub.add_parser("config", help="configuration helpers")
    csub = p.add_subparsers(dest="config_command", required=True, parser_class=_Parser)
    pi = csub.add_parser("init", help="write the documented default configuration")
    pi.add_argument("-o", "--output", help="destination (default: stdout)")
    pi.add_argument("--force", action="store_true", help="overwrite an existing file")
    return parser


def _resolve(args, seeded: bool = True) -> tuple[dict, int | None]:
    overrides: dict = {}
    for attr, key in _OVERRIDES.items():
        v = getattr(args, attr, None)
        if v is not None:
            set_path(overrides, key, v)
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    cfg = load_config(getattr(args, "config", None), overrides=overrides)
    seed = cfg["seed"]
    if seed is None and seeded:
        seed = int(np.random.SeedSequence().entropy % (2**31))
        log.warning("no seed given; using --seed %d", seed)
    return cfg, None if seed is None else int(seed)


def _na(cfg) -> str | None:
    v = cfg["io"]["na_value"]
    return None if v is None else str(v)


def _print_report(report):
    print(report.to_record())


def cmd_impute(args) -> int:
    cfg, seed = _resolve(args)
    fw = framework_config(cfg, seed)
    series = read_series(args.input, na_value=_na(cfg))
    provenance = args.provenance or f"{args.output}.provenance.csv"
    code = EXIT_OK
    try:
        completed, reports = run(series, fw)
    except IncompleteResultError as exc:
        completed, reports = exc.partial, exc.reports
        log.error("%s", exc)
        code = EXIT_INCOMPLETE
    write_series(completed, args.output)
    write_provenance(completed, provenance)
    if args.stages:
        write_rows([r.as_row() for r in reports], args.stages)
    n_imp = int(np.count_nonzero(completed.status > 0))
    print(f"{n_imp} points imputed in {len(reports)} stages; {completed.n_missing} missing")
    if not series.is_complete and np.any(series.observed):
        p = fit_normalization(series)
        _print_report(evaluate(before=apply_normalization(series, p),
                               after=apply_normalization(completed, p), eval_window=fw.window))
    return code


def cmd_evaluate(args) -> int:
    cfg, _ = _resolve(args, seeded=False)
    na = _na(cfg)
    imputed = read_series(args.imputed, na_value=na)
    truth = read_heldout(args.truth, imputed)
    masked = read_series(args.masked, na_value=na) if args.masked else None
    pos, vals = truth.positions, truth.values
    if masked is not None:
        if [str(t) for t in masked.time_index] != [str(t) for t in imputed.time_index]:
            raise UsageError("masked and imputed files have different timestamps")
        keep = masked.status[pos] == MISSING
        pos, vals = pos[keep], vals[keep]
    keep = np.isfinite(vals)
    pos, vals = pos[keep], vals[keep]
    if np.any(imputed.status[pos] == MISSING):
        raise UsageError("imputed file still has missing values at ground-truth timestamps")
    window = args.eval_window or cfg["framework"]["eval_window"] or cfg["framework"]["base_length"]
    pred = imputed.values[pos]
    before, after = masked, imputed
    if args.normalize:
        ref = masked if masked is not None else imputed
        p = fit_normalization(ref)
        vals, pred = (vals - p.center) / p.scale, (pred - p.center) / p.scale
        if masked is not None:
            before, after = apply_normalization(masked, p), apply_normalization(imputed, p)
    report = evaluate(vals, pred, before, after, int(window))
    _print_report(report)
    for name, why in sorted(report.reasons.items()):
        print(f"# {name}: {why}")
    if args.output:
        write_metric_report(report, args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg, seed = _resolve(args)
    series = read_series(args.input, na_value=_na(cfg))
    if args.donor is not None:
        donor = read_series(args.donor, na_value=_na(cfg))
        masked, truth = transfer_pattern(donor.observed.astype(np.int8), series)
        if args.plan:
            raise UsageError("--plan applies to --rate mode only")
    else:
        plan = plan_large_gaps(series, args.rate, args.mean_gap_len, seed)
        masked, truth = apply_gap_plan(series, plan)
        if args.plan:
            plan.to_csv(args.plan)
        log.info("achieved rate %.4f with %d gaps", plan.achieved_rate, len(plan.intervals))
    write_series(masked, args.masked)
    write_heldout(masked, truth, args.truth)
    print(f"{truth.positions.size} points removed; missing rate {masked.missing_rate:.4f}")
    return EXIT_OK


def cmd_restore(args) -> int:
    cfg, _ = _resolve(args, seeded=False)
    masked = read_series(args.masked, na_value=_na(cfg))
    truth = read_heldout(args.truth, masked)
    write_series(restore(masked, truth), args.output)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg, seed = _resolve(args)
    fw = framework_config(cfg, seed)
    spec: ExperimentSpec = spec_from_config(cfg, fw, design=args.design, seeds=args.seeds)
    out = args.output or spec.output_dir
    result = run_experiment(spec, progress=lambda c: log.info(
        "%s x=%s seed=%d %s", c.method, c.x, c.seed, "ok" if c.ok else c.error))
    manifest = write_outputs(result, out)
    print(f"{len(result.cells)} cells, {len(result.failed)} failed; manifest {manifest}")
    for c in result.failed:
        print(f"FAILED {c.method} x={c.x} seed={c.seed}: {c.error}", file=sys.stderr)
    return EXIT_INTERNAL if result.failed else EXIT_OK


def cmd_config(args) -> int:
    if args.output is None:
        sys.stdout.write(DEFAULT_TEMPLATE)
        return EXIT_OK
    path = Path(args.output)
    if path.exists() and not args.force:
        raise UsageError(f"{path} exists (use --force to overwrite)")
    path.write_text(DEFAULT_TEMPLATE)
    print(f"wrote {path}; environment overrides use the {ENV_PREFIX} prefix")
    return EXIT_OK


COMMANDS = {
    "impute": cmd_impute,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "restore": cmd_restore,
    "experiment": cmd_experiment,
    "config": cmd_config,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * getattr(args, "verbose", 0)
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr, force=True)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError, OSError) as exc:
        # ConfigError, SeriesFileError and UnreachableRateError are ValueErrors.
        print(f"mlsif: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - last-resort guard
        log.exception("internal failure")
        print(f"mlsif: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
