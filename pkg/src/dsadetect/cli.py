"""Command-line pipeline: score traces, evaluate detection, run the demo.

Subcommands
-----------
``compute``
    Load train/test trace and label files, score every test row with the
    requested variants, and write one score CSV per (layer, variant) with
    columns ``row,dsa,dist_a,dist_b,anchor_a,anchor_b,true,predicted``.
``eval``
    Everything ``compute`` does, plus detection metrics per (layer, variant):
    ROC CSV (``threshold,fpr,tpr``), coverage CSV (``threshold,coverage``),
    accuracy CSV (``k,accuracy``), optional SVG charts, and a versioned JSON
    report.
``demo``
    Generate blob data, train the demo network, export its taps through the
    standard file formats, then run the full ``eval`` path on those files.
``curves``
    Recompute the metric CSVs (and optional SVGs) from an existing score CSV
    without touching trace files.

Exit codes: 0 success, 2 I/O failure, 3 validation failure, 4 degenerate
data. Failures print a single line ``E_<CODE>: message`` to stderr. The
``SADL_DSA_THREADS`` environment variable caps scoring worker threads.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .demo import (
    PerturbationOracleConfig,
    TrainConfig,
    corner_oracle_mask,
    extract_traces,
    generate_blobs,
    standard_overlapping_blobs,
    train_tinynet,
)
from .dsa import DEFAULT_K, batch_dsa
from .errors import (
    DegenerateDataError,
    DegenerateLabelsError,
    DsaDetectError,
    IoError,
    MissingFileError,
    NoCornerCasesError,
    ValidationError,
)
from .metrics import accuracy_curve, as_samples, coverage_curve, roc_auc
from .report import (
    ALL_VARIANTS,
    EvalEntry,
    RunManifest,
    build_report,
    load_manifest,
    read_scores_csv,
    save_manifest,
    write_accuracy_csv,
    write_coverage_csv,
    write_report_json,
    write_roc_csv,
    write_scores_csv,
)
from .svgplot import svg_line_chart
from .traceio import load_labels, load_trace_file, save_labels, save_trace_file
from .traces import LabeledTraceSet


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors follow the toolkit exit codes."""

    def error(self, message):
        self.exit(3, f"E_VALIDATION: {message}\n")


def _err(code: str, exc: Exception) -> None:
    print(f"{code}: {exc}", file=sys.stderr)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--variant",
        action="append",
        choices=list(ALL_VARIANTS),
        help="score variant to run; repeatable, default all four",
    )
    p.add_argument("--k", type=int, default=DEFAULT_K, help="neighborhood size for dsa3")
    p.add_argument(
        "--delta",
        type=float,
        default=None,
        help="radius for dsa3 neighborhoods (overrides --k)",
    )
    p.add_argument(
        "--class-ref",
        choices=["predicted", "true"],
        default="predicted",
        dest="class_ref",
        help="label vector that defines class membership",
    )
    p.add_argument(
        "--normalize",
        action="store_true",
        help="standardize neurons by training mean/stddev before scoring",
    )
    p.add_argument(
        "--zero-denominator",
        choices=["infinity", "error"],
        default="infinity",
        dest="zero_denominator",
        help="policy when the other-class distance is exactly zero",
    )
    p.add_argument(
        "--exclude-anchor",
        action="store_true",
        dest="exclude_anchor",
        help="drop the anchor row itself from dsa3 neighborhoods",
    )
    p.add_argument(
        "--exclude-self-by-row",
        action="store_true",
        dest="exclude_self_by_row",
        help="skip train row i in test row i's same-class search (train-on-train audits)",
    )
    p.add_argument("--n-classes", type=int, default=None, dest="n_classes")
    p.add_argument("--step", type=int, default=100, help="accuracy-curve stride")
    p.add_argument("--svg", action="store_true", help="also write SVG charts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory")


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", help="JSON manifest; replaces the file flags below")
    p.add_argument("--train-traces", nargs="+", default=None)
    p.add_argument("--train-labels", default=None)
    p.add_argument("--test-traces", nargs="+", default=None)
    p.add_argument("--test-labels", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dsadetect", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"dsadetect {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_compute = sub.add_parser("compute", help="write per-sample score CSVs")
    _add_input_flags(p_compute)
    _add_config_flags(p_compute)

    p_eval = sub.add_parser("eval", help="score and evaluate detection metrics")
    _add_input_flags(p_eval)
    _add_config_flags(p_eval)

    p_demo = sub.add_parser("demo", help="end-to-end synthetic pipeline")
    _add_config_flags(p_demo)
    p_demo.add_argument(
        "--oracle",
        choices=["misclassified", "perturbation"],
        default="misclassified",
        help="corner-case labeling source for the metrics",
    )
    p_demo.add_argument(
        "--epsilon",
        type=float,
        default=0.25,
        help="perturbation bound for --oracle perturbation",
    )
    p_demo.add_argument("--epochs", type=int, default=600)

    p_curves = sub.add_parser("curves", help="rebuild metric CSVs from a score CSV")
    p_curves.add_argument("--scores", required=True, help="existing score CSV")
    p_curves.add_argument("--step", type=int, default=100)
    p_curves.add_argument("--svg", action="store_true")
    p_curves.add_argument("--out", help="output directory")

    return parser


def _manifest_from_args(args) -> RunManifest:
    if args.manifest:
        manifest = load_manifest(args.manifest)
        if args.out:
            manifest = dataclasses.replace(manifest, out_dir=args.out)
        return manifest
    missing = [
        flag
        for flag, value in (
            ("--train-traces", args.train_traces),
            ("--train-labels", args.train_labels),
            ("--test-traces", args.test_traces),
            ("--test-labels", args.test_labels),
            ("--out", args.out),
        )
        if not value
    ]
    if missing:
        raise ValidationError(
            f"missing required flags (or use --manifest): {' '.join(missing)}"
        )
    return RunManifest(
        train_traces=tuple(args.train_traces),
        train_labels=args.train_labels,
        test_traces=tuple(args.test_traces),
        test_labels=args.test_labels,
        out_dir=args.out,
        seed=args.seed,
        variants=tuple(args.variant) if args.variant else ALL_VARIANTS,
        class_reference=args.class_ref,
        normalization=args.normalize,
        k=args.k,
        delta=args.delta,
        zero_denominator_policy=args.zero_denominator,
        include_anchor=not args.exclude_anchor,
        exclude_self_rows=args.exclude_self_by_row,
        step=args.step,
        svg=args.svg,
        n_classes=args.n_classes,
    )


def _load_layer_pairs(manifest: RunManifest):
    """Load every (train, test) labeled trace pair named by the manifest."""
    pairs = []
    names = manifest.layer_names()
    for name, train_path, test_path in zip(
        names, manifest.train_traces, manifest.test_traces
    ):
        train_ts = load_trace_file(train_path)
        test_ts = load_trace_file(test_path)
        train_true, train_pred = load_labels(
            manifest.train_labels, train_ts.n_samples, manifest.n_classes
        )
        test_true, test_pred = load_labels(
            manifest.test_labels, test_ts.n_samples, manifest.n_classes
        )
        n_classes = manifest.n_classes
        if n_classes is None:
            n_classes = (
                int(
                    max(
                        train_true.max(),
                        train_pred.max(),
                        test_true.max(),
                        test_pred.max(),
                    )
                )
                + 1
            )
        train = LabeledTraceSet(train_ts, train_true, train_pred, n_classes)
        test = LabeledTraceSet(test_ts, test_true, test_pred, n_classes)
        pairs.append((name, train, test))
    return pairs


def _ensure_out_dir(manifest: RunManifest) -> Path:
    out = Path(manifest.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}") from exc
    return out


def cmd_compute(manifest: RunManifest) -> list[str]:
    """Score every (layer, variant) pair and write the score CSVs."""
    manifest.check_inputs_exist()
    out = _ensure_out_dir(manifest)
    written = []
    for name, train, test in _load_layer_pairs(manifest):
        for variant in manifest.variants:
            scores = batch_dsa(train, test, manifest.dsa_config(variant))
            path = out / f"scores_{name}_{variant}.csv"
            write_scores_csv(path, scores, test.true_labels, test.predicted_labels)
            written.append(str(path))
            print(f"wrote {path}")
    save_manifest(manifest, out / "manifest.json")
    return written


def _curve_artifacts(
    out: Path,
    stem: str,
    samples,
    true_vec,
    pred_vec,
    step: int,
    svg: bool,
):
    """Compute the three metric curves and write their CSV/SVG files."""
    roc = roc_auc(samples)
    cov = coverage_curve(samples)
    acc = accuracy_curve(samples, true_vec, pred_vec, step=step)

    roc_path = out / f"roc_{stem}.csv"
    cov_path = out / f"coverage_{stem}.csv"
    acc_path = out / f"accuracy_{stem}.csv"
    write_roc_csv(roc_path, roc)
    write_coverage_csv(cov_path, cov)
    write_accuracy_csv(acc_path, acc)

    svg_files = []
    if svg:
        roc_svg = out / f"roc_{stem}.svg"
        svg_line_chart(
            roc_svg,
            [("ROC", list(roc.fpr), list(roc.tpr))],
            f"ROC {stem} (AUC {roc.auc:.4f})",
            "false positive rate",
            "true positive rate",
        )
        cov_svg = out / f"coverage_{stem}.svg"
        svg_line_chart(
            cov_svg,
            [("coverage", list(cov.thresholds), list(cov.coverage))],
            f"Corner-case coverage {stem}",
            "score threshold",
            "coverage",
        )
        acc_svg = out / f"accuracy_{stem}.svg"
        svg_line_chart(
            acc_svg,
            [("accuracy", [float(k) for k, _ in acc], [a for _, a in acc])],
            f"Accuracy over most-surprising-first prefixes {stem}",
            "top-k by score",
            "accuracy",
        )
        svg_files = [str(roc_svg), str(cov_svg), str(acc_svg)]

    return roc, cov, acc, {
        "roc_csv": str(roc_path),
        "coverage_csv": str(cov_path),
        "accuracy_csv": str(acc_path),
        "svg_files": svg_files,
    }


def cmd_eval(manifest: RunManifest, corner_override: np.ndarray | None = None, extra: dict | None = None) -> dict:
    """Score, evaluate, and write the full artifact set; returns the report.

    ``corner_override`` replaces the default corner criterion (prediction
    disagrees with truth) with a caller-supplied boolean mask over test rows;
    the demo uses it for the perturbation oracle.
    """
    manifest.check_inputs_exist()
    out = _ensure_out_dir(manifest)
    entries = []
    for name, train, test in _load_layer_pairs(manifest):
        if corner_override is not None:
            if corner_override.shape != (test.n_samples,):
                raise ValidationError("corner mask must align with test rows")
            corner = corner_override.astype(bool)
        else:
            corner = test.misclassified
        for variant in manifest.variants:
            scores = batch_dsa(train, test, manifest.dsa_config(variant))
            stem = f"{name}_{variant}"
            scores_path = out / f"scores_{stem}.csv"
            write_scores_csv(scores_path, scores, test.true_labels, test.predicted_labels)
            samples = as_samples([s.value for s in scores], corner)
            roc, cov, acc, paths = _curve_artifacts(
                out,
                stem,
                samples,
                test.true_labels,
                test.predicted_labels,
                manifest.step,
                manifest.svg,
            )
            entries.append(
                EvalEntry(
                    variant=variant,
                    layer=name,
                    auc=roc.auc,
                    n_test=test.n_samples,
                    n_corner=int(np.sum(corner)),
                    scores_csv=str(scores_path),
                    roc_csv=paths["roc_csv"],
                    coverage_csv=paths["coverage_csv"],
                    accuracy_csv=paths["accuracy_csv"],
                    roc_points=roc.points,
                    coverage_points=cov.points,
                    accuracy_points=acc,
                    svg_files=paths["svg_files"],
                )
            )
            print(f"{name} {variant}: auc={roc.auc:.6f} corner={int(np.sum(corner))}/{test.n_samples}")
    report = build_report(manifest, entries, extra=extra)
    write_report_json(report, out / "report.json")
    save_manifest(manifest, out / "manifest.json")
    print(f"wrote {out / 'report.json'}")
    return report


def cmd_demo(args) -> dict:
    """Generate data, train the demo net, export taps, and evaluate."""
    if not args.out:
        raise ValidationError("demo requires --out")
    seed = args.seed
    spec = standard_overlapping_blobs()
    data = generate_blobs(spec, seed)
    net = train_tinynet(data, TrainConfig(epochs=args.epochs, seed=seed + 1))

    train_pred = net.predict(data.train_inputs)
    test_pred = net.predict(data.test_inputs)
    train_acc = float(np.mean(train_pred == data.train_labels))
    test_acc = float(np.mean(test_pred == data.test_labels))
    print(f"train accuracy {train_acc:.4f}, test accuracy {test_acc:.4f}")

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}") from exc

    train_files = []
    test_files = []
    for tap in net.taps:
        train_path = out / f"train_{tap}.atrc"
        test_path = out / f"test_{tap}.atrc"
        save_trace_file(extract_traces(net, data.train_inputs, tap), train_path)
        save_trace_file(extract_traces(net, data.test_inputs, tap), test_path)
        train_files.append(str(train_path))
        test_files.append(str(test_path))
    train_labels_path = out / "train.albl"
    test_labels_path = out / "test.albl"
    save_labels(data.train_labels, train_pred, train_labels_path)
    save_labels(data.test_labels, test_pred, test_labels_path)

    manifest = RunManifest(
        train_traces=tuple(train_files),
        train_labels=str(train_labels_path),
        test_traces=tuple(test_files),
        test_labels=str(test_labels_path),
        out_dir=str(out),
        seed=seed,
        variants=tuple(args.variant) if args.variant else ALL_VARIANTS,
        class_reference=args.class_ref,
        normalization=args.normalize,
        k=args.k,
        delta=args.delta,
        zero_denominator_policy=args.zero_denominator,
        include_anchor=not args.exclude_anchor,
        exclude_self_rows=args.exclude_self_by_row,
        step=args.step,
        svg=args.svg,
        n_classes=spec.n_classes,
        oracle=args.oracle,
        epsilon=args.epsilon,
        layers=tuple(net.taps),
    )

    corner_override = None
    if args.oracle == "perturbation":
        oracle_cfg = PerturbationOracleConfig(epsilon=args.epsilon, seed=seed + 2)
        corner_override = corner_oracle_mask(
            net, data.test_inputs, data.test_labels, oracle_cfg
        )

    extra = {"train_accuracy": train_acc, "test_accuracy": test_acc}
    return cmd_eval(manifest, corner_override=corner_override, extra=extra)


def cmd_curves(args) -> None:
    """Rebuild the metric CSVs from one existing score CSV."""
    cols = read_scores_csv(args.scores)
    scores_path = Path(args.scores)
    out = Path(args.out) if args.out else scores_path.parent
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}") from exc
    stem = scores_path.stem
    if stem.startswith("scores_"):
        stem = stem[len("scores_") :]
    corner = cols["true"] != cols["predicted"]
    samples = as_samples(cols["dsa"], corner, rows=cols["row"])
    size = int(cols["row"].max()) + 1
    true_vec = np.zeros(size, dtype=np.int64)
    pred_vec = np.zeros(size, dtype=np.int64)
    true_vec[cols["row"]] = cols["true"]
    pred_vec[cols["row"]] = cols["predicted"]
    roc, _, _, paths = _curve_artifacts(
        out, stem, samples, true_vec, pred_vec, args.step, args.svg
    )
    print(f"auc={roc.auc:.6f}")
    for key in ("roc_csv", "coverage_csv", "accuracy_csv"):
        print(f"wrote {paths[key]}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "compute":
            cmd_compute(_manifest_from_args(args))
        elif args.command == "eval":
            cmd_eval(_manifest_from_args(args))
        elif args.command == "demo":
            cmd_demo(args)
        elif args.command == "curves":
            cmd_curves(args)
        else:  # pragma: no cover - argparse enforces the choices
            raise ValidationError(f"unknown command {args.command!r}")
    except MissingFileError as exc:
        _err("E_IO_MISSING", exc)
        return 2
    except IoError as exc:
        _err("E_IO", exc)
        return 2
    except (NoCornerCasesError, DegenerateLabelsError) as exc:
        _err("E_NO_CORNER_CASES", exc)
        return 4
    except DegenerateDataError as exc:
        _err("E_DEGENERATE", exc)
        return 4
    except ValidationError as exc:
        _err("E_VALIDATION", exc)
        return 3
    except ValueError as exc:
        _err("E_VALIDATION", exc)
        return 3
    except DsaDetectError as exc:  # pragma: no cover - catch-all for new kinds
        _err("E_ERROR", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
