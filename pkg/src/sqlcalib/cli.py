"""Command-line pipeline: validate, score, calibrate, evaluate, report,
label, simulate.

Exit codes: 0 success, 1 data error, 2 usage error. Outputs are
deterministic for identical flags and inputs; no file is written until the
inputs have validated fully. The SQLCALIB_SEED environment variable supplies
a default --seed for evaluate and simulate.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import calibrate as cal
from . import report as rpt
from .binning import monotonic_bins, uniform_bins
from .execmatch import ExecutionError, GoldExecutionError, SQLiteExecutor, label_record
from .metrics import SingleClassError
from .protocol import (
    ProtocolConfig,
    TRUE_MAPS,
    cross_validate,
    generate_synthetic,
    schema_level_evaluate,
)
from .records import (
    Alternative,
    DatasetError,
    PredictionRecord,
    RecordError,
    dataset_summary,
    load_dataset,
    make_dataset,
    write_dataset,
)
from .scoring import POOLING_METHODS, SCORE_METHODS, load_scored, score_dataset, write_scored

ENV_SEED = "SQLCALIB_SEED"


def _resolve_seed(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            parser.error(f"{ENV_SEED} must be an integer, got {env!r}")
    parser.error(f"--seed is required (or set {ENV_SEED})")
    raise AssertionError("unreachable")


def _parse_thresholds(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ValueError(f"bad threshold list {text!r}: {exc}") from exc
    if not values:
        raise ValueError("threshold list is empty")
    return values


def cmd_validate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    dataset = load_dataset(args.input)
    summary = dataset_summary(dataset)
    print(f"records: {summary.n_records}")
    print(f"schemas: {summary.n_schemas}")
    print(f"pct_correct: {summary.pct_correct:.1f}")
    return 0


def cmd_score(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    dataset = load_dataset(args.input)
    result = score_dataset(dataset, args.method, threads=args.threads)
    if not result.scored:
        print(f"error: no record is scorable with method {args.method}", file=sys.stderr)
        return 1
    write_scored(result.scored, args.out)
    print(f"scored {len(result.scored)} records, skipped {len(result.skipped)}", file=sys.stderr)
    for rid, reason in result.skipped:
        print(f"skip {rid}: {reason}", file=sys.stderr)
    return 0


def cmd_calibrate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    scored = load_scored(args.scored)
    pairs = [(s.raw_score, s.label) for s in scored]
    if args.kind == "platt":
        calibrator = cal.fit_platt(pairs)
    else:
        calibrator = cal.fit_isotonic(pairs)
    cal.save_calibrator(calibrator, args.out)
    print(f"fitted {args.kind} calibrator on {len(pairs)} records -> {args.out}", file=sys.stderr)
    return 0


def _config_from_args(args: argparse.Namespace, seed: int) -> ProtocolConfig:
    return ProtocolConfig(
        k=args.k,
        binning=args.binning,
        n_bins=args.bins,
        min_bin_count=args.min_bin_count,
        thresholds=_parse_thresholds(args.thresholds),
        seed=seed,
        scope=args.scope,
        calibrator=args.calibrator,
        tune_fraction=args.tune_fraction,
        min_schema_records=args.min_schema_records,
    )


def cmd_evaluate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    seed = _resolve_seed(args, parser)
    cfg = _config_from_args(args, seed)
    dataset = load_dataset(args.input)
    out_dir = Path(args.out_dir)

    def scored_for(method: str):
        result = score_dataset(dataset, method, threads=args.threads)
        if not result.scored:
            raise DatasetError(f"no record is scorable with method {method}")
        if result.skipped:
            print(f"method {method}: skipped {len(result.skipped)} records", file=sys.stderr)
        return result.scored

    if cfg.scope == "schema_level":
        report = schema_level_evaluate(scored_for(args.method), cfg)
        out_dir.mkdir(parents=True, exist_ok=True)
        rpt.write_schema_csv(report, out_dir / "schemas.csv")
        rpt.write_thresholds_csv([("schema_level", report.micro.prf)], out_dir / "thresholds.csv")
        for schema_id, reason in report.skipped:
            print(f"skip schema {schema_id}: {reason}", file=sys.stderr)
        print(f"wrote {out_dir / 'schemas.csv'} and {out_dir / 'thresholds.csv'}", file=sys.stderr)
        return 0

    report = cross_validate(scored_for(args.method), cfg)
    compare_reports = {}
    if args.compare:
        for method in POOLING_METHODS:
            compare_reports[method] = (
                report if method == args.method else cross_validate(scored_for(method), cfg)
            )
    out_dir.mkdir(parents=True, exist_ok=True)
    rpt.write_report_csv(report, out_dir / "report.csv", dataset_name=dataset.source_name)
    rpt.write_report_json(report, out_dir / "report.json", dataset_name=dataset.source_name)
    rpt.write_thresholds_csv([("schema_disjoint", report.prf_mean)], out_dir / "thresholds.csv")
    if compare_reports:
        rpt.write_compare_csv(compare_reports, out_dir / "compare.csv")
    for note in report.notes:
        print(f"note: {note}", file=sys.stderr)
    print(f"wrote {out_dir / 'report.csv'} and {out_dir / 'thresholds.csv'}", file=sys.stderr)
    return 0


def cmd_report(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if not args.out_csv and not args.out_svg:
        parser.error("nothing to do: pass --out-csv and/or --out-svg")
    scored = load_scored(args.scored)
    calibrator = cal.load_calibrator(args.calibrator)
    calibrated = cal.calibrate_records(calibrator, scored)
    confs = [c.calibrated_score for c in calibrated]
    labels = [c.label for c in calibrated]
    if args.binning == "uniform":
        partition = uniform_bins(confs, labels, args.bins)
    else:
        partition = monotonic_bins(confs, labels, args.min_bin_count)
    series = rpt.reliability_series(partition, args.label)
    if args.out_csv:
        rpt.write_reliability_csv([series], args.out_csv)
        print(f"wrote {args.out_csv}", file=sys.stderr)
    if args.out_svg:
        rpt.render_reliability([series], args.out_svg)
        print(f"wrote {args.out_svg}", file=sys.stderr)
    return 0


def cmd_label(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    db_root = Path(args.db_root)
    pairs = []
    with Path(args.pairs).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{args.pairs}:{lineno}: malformed line: {exc}") from exc
            for key in ("id", "schema_id", "gold_sql", "pred_sql"):
                if key not in obj:
                    raise DatasetError(f"{args.pairs}:{lineno}: missing field {key!r}")
            pairs.append(obj)
    if not pairs:
        raise DatasetError(f"empty pair file: {args.pairs}")

    executors: dict[Path, SQLiteExecutor] = {}
    records = []
    for obj in pairs:
        if "db_path" in obj:
            db_path = Path(obj["db_path"])
            if not db_path.is_absolute():
                db_path = db_root / db_path
        else:
            db_path = db_root / obj["schema_id"] / f"{obj['schema_id']}.sqlite"
        if db_path not in executors:
            executors[db_path] = SQLiteExecutor(db_path, timeout_s=args.timeout)
        label = label_record(
            obj["gold_sql"], obj["pred_sql"], executors[db_path], strict_columns=args.strict_columns
        )
        passthrough = {
            k: v
            for k, v in obj.items()
            if k not in ("id", "schema_id", "gold_sql", "pred_sql", "label", "db_path")
        }
        self_check = passthrough.pop("self_check_bool", None)
        alternatives = passthrough.pop("alternatives", None)
        records.append(
            PredictionRecord(
                id=str(obj["id"]),
                schema_id=str(obj["schema_id"]),
                label=label,
                question=passthrough.pop("question", None),
                token_probs=(
                    tuple(float(p) for p in passthrough.pop("token_probs"))
                    if "token_probs" in passthrough
                    else None
                ),
                self_check_bool=(
                    (float(self_check["p_true"]), float(self_check["p_false"]))
                    if self_check is not None
                    else None
                ),
                verbalized_prob=passthrough.pop("verbalized_prob", None),
                alternatives=(
                    tuple(Alternative(float(a["score"]), bool(a["equivalent"])) for a in alternatives)
                    if alternatives is not None
                    else None
                ),
                extra=passthrough,
            )
        )
    write_dataset(make_dataset(records, source_name=Path(args.out).name), args.out)
    n_correct = sum(r.label for r in records)
    print(f"labeled {len(records)} records ({n_correct} correct) -> {args.out}", file=sys.stderr)
    return 0


def cmd_simulate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    seed = _resolve_seed(args, parser)
    dataset = generate_synthetic(args.n, args.map, seed, n_schemas=args.schemas)
    write_dataset(dataset, args.out)
    print(f"wrote {args.n} synthetic records -> {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqlcalib",
        description="Confidence calibration toolkit for generated SQL predictions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a prediction file and print its summary")
    p.add_argument("--input", required=True, help="line-delimited prediction records")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("score", help="attach raw confidence scores")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", required=True, choices=SCORE_METHODS)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("calibrate", help="fit a rescaling map on scored records")
    p.add_argument("--scored", required=True)
    p.add_argument("--kind", required=True, choices=("platt", "isotonic"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="run the full calibration evaluation")
    p.add_argument("--input", required=True)
    p.add_argument("--method", default="prod", choices=SCORE_METHODS)
    p.add_argument("--calibrator", default="isotonic", choices=("platt", "isotonic"),
                   help="calibrated scores used for the threshold sweep")
    p.add_argument("--binning", default="uniform", choices=("uniform", "monotonic"))
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--min-bin-count", type=int, default=1)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--thresholds", default="0.9,0.85,0.8,0.7")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--scope", default="schema_disjoint",
                   choices=("schema_disjoint", "schema_level"))
    p.add_argument("--tune-fraction", type=float, default=0.2)
    p.add_argument("--min-schema-records", type=int, default=10)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--compare", action="store_true",
                   help="evaluate every pooling method and write compare.csv")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="reliability-plot data and SVG")
    p.add_argument("--scored", required=True)
    p.add_argument("--calibrator", required=True, help="calibrator file from `calibrate`")
    p.add_argument("--binning", default="uniform", choices=("uniform", "monotonic"))
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--min-bin-count", type=int, default=1)
    p.add_argument("--label", default="series")
    p.add_argument("--out-csv", default=None)
    p.add_argument("--out-svg", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("label", help="execution-match labels for gold/predicted SQL pairs")
    p.add_argument("--pairs", required=True,
                   help="JSONL with id, schema_id, gold_sql, pred_sql (+ fields to carry over)")
    p.add_argument("--db-root", required=True,
                   help="directory holding <schema_id>/<schema_id>.sqlite files")
    p.add_argument("--out", required=True)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--strict-columns", action="store_true")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("simulate", help="seeded synthetic prediction records")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--map", default="identity", choices=sorted(TRUE_MAPS))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--schemas", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except GoldExecutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DatasetError, RecordError, SingleClassError, ExecutionError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
