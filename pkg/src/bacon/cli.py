"""Command-line entry points.

Subcommands: angles, fit, bacon, softmax, evaluate, experiment, plot.
Angle and confidence tables travel as CSV (``sample_id,label,phi_0..`` and
``sample_id,label,p_0..``); likelihood tables, metric reports and experiment
configs travel as JSON.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import harness, report as report_mod
from .baselines import fit_temperature, softmax
from .bundle_io import read_bundle
from .confidence import ClassWeights, ConfidenceMatrix
from .distributions import LikelihoodTable, fit_likelihood_table
from .errors import BaconError, FormatError
from .estimator import bacon_confidences, calibrate_delta
from .geometry import AngleRecord, angle_matrix, compute_angles, compute_logits, records_to_matrix
from .metrics import CalibrationReport, calibration_report


# ---------------------------------------------------------------------------
# CSV wire formats


def write_angles_csv(path: str, records: list[AngleRecord]) -> None:
    matrix, labels, ids = records_to_matrix(records)
    k = matrix.shape[1]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "label"] + [f"phi_{j}" for j in range(k)])
        for i in range(matrix.shape[0]):
            writer.writerow([int(ids[i]), int(labels[i])] + [repr(float(v)) for v in matrix[i]])


def read_angles_csv(path: str) -> list[AngleRecord]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["sample_id", "label"]:
            raise FormatError(f"{path}: expected header sample_id,label,phi_0..")
        records = []
        for row in reader:
            records.append(
                AngleRecord(
                    angles=np.array([float(v) for v in row[2:]]),
                    label=int(row[1]),
                    sample_id=int(row[0]),
                )
            )
    return records


def write_confidences_csv(path: str, conf: ConfidenceMatrix, sample_ids=None) -> None:
    ids = np.arange(conf.n_samples) if sample_ids is None else np.asarray(sample_ids)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["sample_id", "label"] + [f"p_{j}" for j in range(conf.n_classes)]
        )
        for i in range(conf.n_samples):
            writer.writerow(
                [int(ids[i]), int(conf.labels[i])] + [repr(float(v)) for v in conf.probs[i]]
            )


def read_confidences_csv(path: str, estimator_tag: str = "unspecified") -> ConfidenceMatrix:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["sample_id", "label"]:
            raise FormatError(f"{path}: expected header sample_id,label,p_0..")
        labels, rows = [], []
        for row in reader:
            labels.append(int(row[1]))
            rows.append([float(v) for v in row[2:]])
    return ConfidenceMatrix(
        probs=np.asarray(rows), labels=np.asarray(labels, dtype=np.int64),
        estimator_tag=estimator_tag,
    )


def _load_weights(arg: str, n_classes: int) -> ClassWeights:
    if arg == "uniform":
        return ClassWeights.uniform(n_classes)
    with open(arg, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if isinstance(payload, dict):
        payload = payload["weights"]
    return ClassWeights(np.asarray(payload, dtype=np.float64))


# ---------------------------------------------------------------------------
# subcommands


def _cmd_angles(args) -> int:
    bundle = read_bundle(args.bundle)
    records = compute_angles(
        bundle.activations, bundle.weights, labels=bundle.labels, signed=args.signed
    )
    write_angles_csv(args.out, records)
    print(f"wrote {len(records)} angle rows to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    records = read_angles_csv(args.angles)
    table = fit_likelihood_table(
        records, family=args.family, min_fit_size=args.min_fit_size
    )
    table.save(args.out)
    print(f"fitted {len(table.cells)} cells (K={table.n_classes}) -> {args.out}")
    return 0


def _cmd_bacon(args) -> int:
    records = read_angles_csv(args.angles)
    table = LikelihoodTable.load(args.table)
    weights = _load_weights(args.weights, table.n_classes)
    if args.delta == "auto":
        if not args.holdout_angles:
            raise BaconError("--delta auto needs --holdout-angles")
        holdout = read_angles_csv(args.holdout_angles)
        delta = calibrate_delta(records, table, weights, holdout)
        print(f"calibrated delta = {delta:.6g}")
    else:
        table.delta = float(args.delta)
    conf = bacon_confidences(records, table, weights, denominator=args.denominator)
    _, _, ids = records_to_matrix(records)
    write_confidences_csv(args.out, conf, sample_ids=ids)
    print(f"wrote {conf.n_samples} confidence rows ({conf.estimator_tag}) to {args.out}")
    return 0


def _cmd_softmax(args) -> int:
    bundle = read_bundle(args.bundle)
    logits = compute_logits(
        bundle.activations, bundle.weights, bundle.biases,
        labels=bundle.labels, reference=bundle.logits,
    )
    if args.temperature == "auto":
        if not args.holdout_bundle:
            raise BaconError("--temperature auto needs --holdout-bundle")
        hold = read_bundle(args.holdout_bundle)
        hold_logits = compute_logits(
            hold.activations, hold.weights, hold.biases,
            labels=hold.labels, reference=hold.logits,
        )
        param = fit_temperature(hold_logits)
        beta = param.beta
        print(f"fitted beta = {beta:.6g} (T = {param.temperature:.6g})")
    else:
        t = float(args.temperature)
        if t <= 0:
            raise BaconError("temperature must be positive")
        beta = 1.0 / t
    conf = softmax(logits, beta=beta)
    _, _, ids = records_to_matrix(logits)
    write_confidences_csv(args.out, conf, sample_ids=ids)
    print(f"wrote {conf.n_samples} confidence rows ({conf.estimator_tag}) to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    conf = read_confidences_csv(args.confidences, estimator_tag=args.estimator)
    rep = calibration_report(
        conf, n_bins=args.M, n_ranges=args.R, threshold=args.threshold
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(rep.to_dict(), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    print(
        f"{rep.estimator_tag}: n={rep.n} ECE={rep.ece:.6g} "
        f"MCE={rep.mce:.6g} ACE={rep.ace:.6g} -> {args.out}"
    )
    return 0


def _cmd_experiment(args) -> int:
    config = harness.ExperimentConfig.load(args.config)
    if args.out:
        config.output_dir = args.out
    if not config.output_dir:
        raise BaconError("config needs output_dir (or pass --out)")
    runs, failures = harness.run_experiment(config)
    print(f"{len(runs)} seeds completed, {len(failures)} failed -> {config.output_dir}")
    for seed, err in sorted(failures.items()):
        print(f"  seed {seed} failed: {err}", file=sys.stderr)
    return 0


def _load_runs_for_plot(path: str) -> list[harness.SeedRun]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if "reports" in payload:  # one SeedRun
        return [harness.SeedRun.from_dict(payload)]
    raise FormatError(f"{path} is not a per-seed report (missing 'reports')")


def _cmd_plot(args) -> int:
    with open(args.report, "r", encoding="utf-8") as fh:
        payload = json.load(fh)

    if args.kind in ("FixedReliability", "AdaptiveReliability"):
        if "reports" in payload:
            if not args.estimator:
                raise BaconError("per-seed report given: pick one with --estimator")
            rep = CalibrationReport.from_dict(payload["reports"][args.estimator])
        else:
            rep = CalibrationReport.from_dict(payload)
        if args.kind == "FixedReliability":
            svg, csv_path = report_mod.render_fixed_reliability(rep, args.out)
        else:
            svg, csv_path = report_mod.render_adaptive_reliability(rep, args.out)
    elif args.kind == "MceScatter":
        if "estimators" in payload:  # aggregate.json: per-seed values per tag
            agg = harness.AggregateResult.from_dict(payload)
            points = []
            for tag in sorted(agg.stats):
                freqs = agg.stats[tag]["mce_bin_frequency"]["values"]
                mces = agg.stats[tag]["mce"]["values"]
                for seed, f, m in zip(agg.seeds, freqs, mces):
                    points.append((seed, tag, int(f), float(m)))
            svg, csv_path = report_mod.render_mce_scatter_points(points, args.out)
        else:
            svg, csv_path = report_mod.render_mce_scatter(
                _load_runs_for_plot(args.report), args.out
            )
    elif args.kind == "CIWhisker":
        agg = harness.AggregateResult.from_dict(payload)
        svg, csv_path = report_mod.render_ci_whisker(agg, args.out, metric=args.metric)
    elif args.kind == "ClassScatter":
        svg, csv_path = report_mod.render_class_scatter(
            _load_runs_for_plot(args.report), args.out, metric=args.metric
        )
    else:
        raise BaconError(f"unknown plot kind {args.kind!r}")
    print(f"wrote {svg} and {csv_path}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bacon",
        description="Geometric Bayesian confidence estimation and calibration metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("angles", help="compute output-node angles from a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--signed", action="store_true",
                   help="signed dot product (angles in [0, pi])")
    p.set_defaults(func=_cmd_angles)

    p = sub.add_parser("fit", help="fit the angle-likelihood table")
    p.add_argument("--angles", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--family", default="auto",
                   choices=["auto", "Normal", "LogNormal", "Cauchy"])
    p.add_argument("--min-fit-size", type=int, default=30)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("bacon", help="Bayesian confidences from angles + table")
    p.add_argument("--angles", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--weights", default="uniform",
                   help="'uniform' or a JSON file with K weights")
    p.add_argument("--delta", default="auto",
                   help="'auto' (needs --holdout-angles) or a value in radians")
    p.add_argument("--holdout-angles", default=None)
    p.add_argument("--denominator", default="own-node",
                   choices=["own-node", "per-node-mixture"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bacon)

    p = sub.add_parser("softmax", help="Softmax confidences from a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--temperature", default="1.0",
                   help="'auto' (needs --holdout-bundle) or a temperature T")
    p.add_argument("--holdout-bundle", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_softmax)

    p = sub.add_parser("evaluate", help="ECE/MCE/ACE report from confidences")
    p.add_argument("--confidences", required=True)
    p.add_argument("--M", type=int, default=None, help="fixed bin count (default K-1)")
    p.add_argument("--R", type=int, default=None, help="adaptive range count (default K-1)")
    p.add_argument("--threshold", type=float, default=0.001)
    p.add_argument("--estimator", default="unspecified")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("experiment", help="run a multi-seed experiment from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override config output_dir")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("plot", help="render a report as SVG + CSV")
    p.add_argument("--report", required=True)
    p.add_argument("--kind", required=True, choices=list(report_mod.PLOT_KINDS))
    p.add_argument("--out", required=True)
    p.add_argument("--metric", default="ece", choices=["ece", "ace", "mce"])
    p.add_argument("--estimator", default=None)
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BaconError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
