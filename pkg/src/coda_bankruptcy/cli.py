"""Command-line entry point.

Subcommands::

    diagnose      skewness/kurtosis table and IQR outlier counts
    run           the six-way method x feature-set comparison
    synth         write a seeded synthetic dataset
    validate-plr  check that a log-ratio edge list is a spanning tree

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .coda import PARTS, SPANNING_GRAPH, PlrGraph
from .diagnostics import diagnostics_table, iqr_outlier_count
from .errors import CodaBankruptcyError, ConfigError, DataError
from .evaluation import FEATURE_SETS, METHODS, ExperimentConfig, render_table, run_experiment_grid
from .features import full_plr_matrix, standard_features
from .ingest import IMPUTATION_NOTE, INACTIVE_RULE, Schema, load_dataset
from .models.knn import DEFAULT_K_GRID
from .synthetic import generate_synthetic


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _dump_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.replace(" ", "").split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _column_override(text: str) -> tuple[str, str]:
    key, sep, name = text.partition("=")
    if not sep or not key or not name:
        raise argparse.ArgumentTypeError(f"expected FIELD=COLUMN, got {text!r}")
    return key, name


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, type=Path, help="delimited text file, one row per firm")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--delta-fraction", type=float, default=0.65, help="zero replacement fraction (default 0.65)")
    p.add_argument(
        "--column",
        action="append",
        type=_column_override,
        default=[],
        metavar="FIELD=COLUMN",
        help="rename a required column, e.g. --column nca=NonCurrentAssets",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coda-bankruptcy", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("diagnose", help="distribution diagnostics and outlier counts")
    _add_input_args(p)
    p.add_argument("--export-features", action="store_true", help="also write both feature matrices as CSV")

    p = sub.add_parser("run", help="full experiment grid")
    _add_input_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--methods", choices=[*METHODS, "all"], default="all")
    p.add_argument("--features", choices=["standard", "compositional", "both"], default="both")
    p.add_argument("--k-grid", type=_int_list, default=DEFAULT_K_GRID)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--mtry", type=int, default=None, help="default: ceil(features/3)")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--knn-zscore", action="store_true")
    p.add_argument("--stratified", action="store_true")
    p.add_argument("--save-models", action="store_true", help="also write fitted models as JSON")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--rate", type=float, default=0.03)
    p.add_argument(
        "--signal",
        action="append",
        type=_column_override,
        default=[],
        metavar="PLR=COEF",
        help="logit coefficient on a log-ratio of the default spanning set, e.g. 'log(RE/NCL)=6'",
    )
    p.add_argument("--out", required=True, type=Path, help="output CSV file")

    p = sub.add_parser("validate-plr", help="check a log-ratio edge list")
    p.add_argument("edges", nargs="*", help="edges such as NCA/CA; default: the standard six")
    p.add_argument("--file", type=Path, help="file with one edge per line")
    return parser


def _load(args):
    schema = Schema.with_overrides(dict(args.column))
    if not args.input.exists():
        raise DataError(f"input file {args.input} not found")
    try:
        return load_dataset(args.input, schema, args.delimiter, args.delta_fraction)
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {args.input}: {exc}") from exc


def _input_config(args) -> dict:
    return {
        "input": str(args.input),
        "delimiter": args.delimiter,
        "delta_fraction": args.delta_fraction,
        "columns": Schema.with_overrides(dict(args.column)).required(),
        "inactive_rule": INACTIVE_RULE,
        "zero_imputation": IMPUTATION_NOTE,
    }


def cmd_diagnose(args) -> int:
    dataset, ingest = _load(args)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "rejections.txt").write_text(ingest.parse.report_text(), encoding="utf-8")
    std = standard_features(dataset.parts, dataset.labels, dataset.ids)
    plr = full_plr_matrix(dataset.parts, dataset.labels, dataset.ids)
    table = diagnostics_table(std, plr)
    outliers_std = iqr_outlier_count(std)
    outliers_plr = iqr_outlier_count(plr)
    _dump_json(
        args.out / "diagnostics.json",
        {
            "config": _input_config(args),
            "ingest": ingest.as_dict(),
            "table": table.as_json(),
            "iqr_outliers": {"standard": outliers_std.as_dict(), "compositional": outliers_plr.as_dict()},
        },
    )
    (args.out / "diagnostics.csv").write_text(table.to_delimited(), encoding="utf-8")
    text = table.render()
    text += (
        f"\nIQR rule on standard ratios: {outliers_std.rows_flagged} of {outliers_std.n_rows} rows flagged"
        f"\nIQR rule on log-ratios: {outliers_plr.rows_flagged} of {outliers_plr.n_rows} rows flagged"
        "\n(counted only; no rows are removed)\n"
    )
    (args.out / "diagnostics.txt").write_text(text, encoding="utf-8")
    if args.export_features:
        for name, fm in (("standard", std), ("plr", plr)):
            with open(args.out / f"features_{name}.csv", "w", newline="", encoding="utf-8") as fh:
                fm.to_csv(fh, args.delimiter)
    sys.stdout.write(text)
    return 0


def cmd_run(args) -> int:
    methods = METHODS if args.methods == "all" else (args.methods,)
    feature_sets = FEATURE_SETS if args.features == "both" else (args.features,)
    config = ExperimentConfig(
        seed=args.seed,
        train_fraction=args.train_fraction,
        methods=methods,
        feature_sets=feature_sets,
        k_grid=args.k_grid,
        n_trees=args.trees,
        mtry=args.mtry,
        threshold=args.threshold,
        knn_zscore=args.knn_zscore,
        stratified=args.stratified,
    )
    dataset, ingest = _load(args)
    result = run_experiment_grid(dataset, config)

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "rejections.txt").write_text(ingest.parse.report_text(), encoding="utf-8")
    _dump_json(
        out / "report.json",
        {
            "config": {**_input_config(args), **config.as_dict()},
            "ingest": ingest.as_dict(),
            "split": result.split_counts,
            "reports": [r.as_dict() for r in result.reports],
            "cells": [c.summary() for c in result.cells],
        },
    )
    table = render_table(result.reports)
    (out / "report.txt").write_text(table, encoding="utf-8")

    for cell in result.cells:
        tag = f"{cell.report.method}_{cell.report.feature_set}"
        if cell.logistic_table is not None:
            _write_rows(
                out / f"logistic_{cell.report.feature_set}.csv",
                ["term", "estimate", "std_error", "z", "p_value"],
                ([r[k] if r[k] is not None else "" for k in ("term", "estimate", "std_error", "z", "p_value")] for r in cell.logistic_table),
            )
        if cell.knn_tuning is not None:
            _write_rows(
                out / f"knn_tuning_{cell.report.feature_set}.csv",
                ["k", "accuracy"],
                cell.knn_tuning.accuracy.items(),
            )
        if cell.importance is not None:
            _write_rows(
                out / f"importance_{cell.report.feature_set}.csv",
                ["rank", "feature", "mean_decrease_gini"],
                ((i + 1, f, v) for i, (f, v) in enumerate(cell.importance)),
            )
        if args.save_models and hasattr(cell.model, "to_dict"):
            _dump_json(out / f"model_{tag}.json", cell.model.to_dict())

    sys.stdout.write(table)
    return 0


def cmd_synth(args) -> int:
    signal = {}
    for key, value in args.signal:
        try:
            signal[key] = float(value)
        except ValueError:
            raise ConfigError(f"signal coefficient {value!r} is not a number") from None
    dataset = generate_synthetic(args.seed, args.n, args.rate, signal)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        dataset.to_csv(fh)
    sys.stdout.write(f"wrote {len(dataset)} firms ({dataset.n_bankrupt} bankrupt) to {args.out}\n")
    return 0


def cmd_validate_plr(args) -> int:
    specs = list(args.edges)
    if args.file is not None:
        try:
            specs += [line for line in args.file.read_text(encoding="utf-8").splitlines() if line.strip()]
        except OSError as exc:
            raise DataError(f"cannot read {args.file}: {exc}") from exc
    try:
        graph = PlrGraph.parse(specs) if specs else SPANNING_GRAPH
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = graph.validate()
    sys.stdout.write(f"edges: {', '.join(graph.labels)}\nparts: {', '.join(PARTS)}\n{result.message()}\n")
    return 0 if result else DataError.exit_code


COMMANDS = {
    "diagnose": cmd_diagnose,
    "run": cmd_run,
    "synth": cmd_synth,
    "validate-plr": cmd_validate_plr,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except CodaBankruptcyError as exc:
        category = {2: "config", 3: "data", 4: "numeric"}.get(exc.exit_code, "error")
        sys.stderr.write(f"{category} error: {exc}\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
