"""Command-line interface.

Exit codes: 0 success, 2 bad usage, 3 data or runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import data as data_mod
from . import pipeline, results
from .errors import BorelReduceError, DataError, ParameterError
from .plot import box_plot_svg

EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


def _target_dims(text):
    if text in ("all", "none"):
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'all', got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _range(text):
    """``A..B`` (inclusive) or a comma list."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return list(range(int(a), int(b) + 1))
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B or a comma list, got {text!r}") from None


def _add_data_flags(p):
    p.add_argument("--data", help="dataset file (yeast or phoneme format)")
    p.add_argument("--format", choices=["yeast", "phoneme", "synth"], default="yeast")
    p.add_argument("--synth-n", type=_positive, default=1000, help="rows to draw for --format synth")
    p.add_argument("--synth-dims", type=_positive, default=2)


def _add_pipeline_flags(p):
    p.add_argument("--target-dims", type=_target_dims, default=1, help="integer or 'all'")
    p.add_argument("--base", type=int, default=3)
    p.add_argument("--precision", type=_positive, default=8)
    p.add_argument("--k", type=_positive, default=11)
    p.add_argument("--matrix", choices=list(pipeline.MATRIX_KINDS), default="identity")
    p.add_argument("--matrix-file", help="JSON n x n matrix for --matrix explicit")
    p.add_argument("--grouping", choices=["strided", "contiguous"], default="strided")
    p.add_argument("--method", choices=list(pipeline.METHODS), default="borel")
    p.add_argument("--no-normalize", action="store_true", help="skip min-max scaling (method none/pca)")
    p.add_argument("--split", type=float, default=0.7, help="training share of each split")
    p.add_argument("--trials", type=_positive, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-random", type=_positive, default=100)
    p.add_argument("--rank-trials", type=_positive, default=3)
    p.add_argument("--selection-trials", type=_positive, default=1)
    p.add_argument("--refit-k", type=_range, default=None, help="re-select k per trial from A..B")
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="also write trial records as CSV")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="borel-reduce",
        description="Digit-interleaving dimension reduction with kNN evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="repeated trials at one setting")
    _add_data_flags(p)
    _add_pipeline_flags(p)

    p = sub.add_parser("sweep-k", help="accuracy for a range of k")
    _add_data_flags(p)
    _add_pipeline_flags(p)
    p.add_argument("--k-min", type=_positive, default=1)
    p.add_argument("--k-max", type=_positive, default=30)

    p = sub.add_parser("sweep-base", help="accuracy for a range of bases")
    _add_data_flags(p)
    _add_pipeline_flags(p)
    p.add_argument("--bases", type=_range, default=list(range(2, 21)), help="A..B or list")

    p = sub.add_parser("compare-matrices", help="identity vs permutation vs random O(n)/SO(n)")
    _add_data_flags(p)
    _add_pipeline_flags(p)

    p = sub.add_parser("consistency", help="error vs training size on a synthetic law")
    p.add_argument("--n-grid", type=_range, default=[100, 400, 1600, 4000])
    p.add_argument("--k-rule", choices=["sqrt", "log"], default="sqrt")
    p.add_argument("--reduce", action="store_true", help="interleave a 2-D embedding into 1-D")
    p.add_argument("--repetitions", type=_positive, default=10)
    p.add_argument("--n-test", type=_positive, default=2000)
    p.add_argument("--base", type=int, default=2)
    p.add_argument("--precision", type=_positive, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("plot", help="SVG box plot of a result file's summary")
    p.add_argument("summary", help="result file written by another subcommand")
    p.add_argument("--out", required=True)
    p.add_argument("--title", default="")
    p.add_argument("--ylabel", default=None)
    return parser


def _load_dataset(args):
    if args.format == "synth":
        spec = data_mod.StepSpec(dims=args.synth_dims, duplicate_noise=0.05)
        ds = data_mod.synth_two_class(args.synth_n, seed=args.seed, spec=spec)
        return ds, {"name": ds.name, "format": "synth", "rows": ds.n_rows, "features": ds.n_features,
                    "classes": ds.n_classes, "sha256": None, "path": None,
                    "generator": ds.metadata["spec"]}
    if not args.data:
        raise UsageError(f"--data is required for --format {args.format}")
    try:
        ds = data_mod.load(args.data, args.format)
    except OSError as exc:
        raise DataError(f"cannot read {args.data}: {exc.strerror or exc}") from None
    info = {
        "name": ds.name,
        "format": args.format,
        "path": str(args.data),
        "sha256": ds.metadata["sha256"],
        "rows": ds.n_rows,
        "features": ds.n_features,
        "classes": ds.n_classes,
        "dropped_columns": list(ds.dropped_columns),
    }
    return ds, info


def _config(args, n_features):
    explicit = None
    if args.matrix == "explicit":
        if not args.matrix_file:
            raise UsageError("--matrix explicit needs --matrix-file")
        try:
            with open(args.matrix_file, encoding="utf-8") as fh:
                explicit = tuple(tuple(float(v) for v in row) for row in json.load(fh))
        except (OSError, ValueError, TypeError) as exc:
            raise DataError(f"cannot read matrix file: {exc}") from None
    if args.target_dims is not None and args.target_dims > n_features:
        raise UsageError(f"--target-dims {args.target_dims} exceeds the {n_features} feature columns")
    try:
        return pipeline.PipelineConfig(
            target_dims=args.target_dims,
            base=args.base,
            precision=args.precision,
            k=args.k,
            matrix_kind=args.matrix,
            grouping_mode=args.grouping,
            split_fraction=args.split,
            trials=args.trials,
            master_seed=args.seed,
            method=args.method,
            normalize=not args.no_normalize,
            n_random=args.n_random,
            rank_trials=args.rank_trials,
            selection_trials=args.selection_trials,
            refit_k=tuple(args.refit_k) if args.refit_k else None,
            explicit_matrix=explicit,
        )
    except ParameterError as exc:
        raise UsageError(str(exc)) from None


def _run_pipeline_command(args):
    ds, info = _load_dataset(args)
    cfg = _config(args, ds.n_features)
    extra = {}
    if args.command == "evaluate":
        summary = pipeline.run_trials(ds, cfg)
    elif args.command == "sweep-k":
        if args.k_min > args.k_max:
            raise UsageError("--k-min must not exceed --k-max")
        summary = pipeline.sweep_k(ds, cfg, range(args.k_min, args.k_max + 1))
        extra = {"k_range": [args.k_min, args.k_max]}
    elif args.command == "sweep-base":
        if not args.bases or min(args.bases) < 2:
            raise UsageError("--bases must be integers >= 2")
        summary = pipeline.sweep_base(ds, cfg, args.bases)
        extra = {"bases": args.bases}
    else:
        summary = pipeline.compare_matrices(ds, cfg)
        extra = {"selection": "best random candidate chosen on validation splits of each trial's training rows"}
    config = {**cfg.to_dict(), **extra}
    manifest = results.make_manifest(args.command, config, info, cfg.master_seed)
    results.write_sweep(args.out, manifest, summary)
    if args.csv:
        results.write_csv(args.csv, summary)
    for agg in summary.aggregates:
        print(f"{summary.parameter}={agg.setting}: mean {agg.mean:.4f} sd {agg.std:.4f} (n={agg.n})")
    if summary.best is not None:
        print(f"best {summary.parameter}: {summary.best}")


def _run_consistency(args):
    if any(b <= a for a, b in zip(args.n_grid, args.n_grid[1:])) or min(args.n_grid) < 1:
        raise UsageError("--n-grid must be strictly increasing positive integers")
    try:
        table = pipeline.consistency_experiment(
            n_grid=args.n_grid,
            rule=args.k_rule,
            reduce=args.reduce,
            seed=args.seed,
            n_test=args.n_test,
            repetitions=args.repetitions,
            base=args.base,
            precision=args.precision,
        )
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    config = {k: v for k, v in vars(args).items() if k not in ("out",)}
    manifest = results.make_manifest("consistency", config, None, args.seed)
    results.write_consistency(args.out, manifest, table)
    print(f"Bayes error {table.bayes_error:.4f}")
    for row in table.rows:
        print(f"n={row.n} k={row.k}: mean error {row.mean_error:.4f}")


def _run_plot(args):
    _, _, summary = results.read_results(args.summary)
    parameter = summary.get("parameter", "setting")
    ylabel = args.ylabel or ("error" if parameter == "n" else "accuracy")
    svg = box_plot_svg(summary["settings"], title=args.title, xlabel=parameter, ylabel=ylabel)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "consistency":
            _run_consistency(args)
        elif args.command == "plot":
            _run_plot(args)
        else:
            _run_pipeline_command(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"borel-reduce: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"borel-reduce: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, BorelReduceError, OSError, ArithmeticError) as exc:
        print(f"borel-reduce: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
