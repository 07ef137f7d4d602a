"""Run manifests and result artifacts: score tables, curve CSVs, JSON report.

Every artifact written here can be read back by a loader in this module, so
a pipeline's outputs are always re-consumable by the toolkit itself. Numeric
CSV cells are written with ``repr`` so values round-trip exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .dsa import DEFAULT_K, DsaConfig, DsaScore, DsaVariant, NeighborhoodSpec
from .errors import IoError, MissingFileError, ValidationError
from .metrics import CoverageCurve, RocCurve

SCORE_COLUMNS = ("row", "dsa", "dist_a", "dist_b", "anchor_a", "anchor_b", "true", "predicted")

ALL_VARIANTS = tuple(v.value for v in DsaVariant)

REPORT_SCHEMA = 1


@dataclass(frozen=True)
class RunManifest:
    """Everything a scoring/evaluation run needs, serializable to JSON.

    ``train_traces`` and ``test_traces`` list one trace file per tapped
    layer, in matching order; the label files are shared across layers.
    ``delta``, when set, switches the local-neighborhood variant from
    k-nearest to radius mode.
    """

    train_traces: tuple[str, ...]
    train_labels: str
    test_traces: tuple[str, ...]
    test_labels: str
    out_dir: str
    seed: int = 0
    variants: tuple[str, ...] = ALL_VARIANTS
    class_reference: str = "predicted"
    normalization: bool = False
    k: int = DEFAULT_K
    delta: float | None = None
    zero_denominator_policy: str = "infinity"
    include_anchor: bool = True
    exclude_self_rows: bool = False
    step: int = 100
    svg: bool = False
    n_classes: int | None = None
    oracle: str = "misclassified"
    epsilon: float = 0.25
    layers: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "train_traces", tuple(self.train_traces))
        object.__setattr__(self, "test_traces", tuple(self.test_traces))
        object.__setattr__(self, "variants", tuple(self.variants))
        if len(self.train_traces) == 0 or len(self.test_traces) == 0:
            raise ValidationError("manifest needs at least one trace file per side")
        if len(self.train_traces) != len(self.test_traces):
            raise ValidationError(
                "train and test trace lists must pair up layer by layer"
            )
        for v in self.variants:
            try:
                DsaVariant(v)
            except ValueError as exc:
                raise ValidationError(f"unknown variant {v!r}") from exc
        if self.oracle not in ("misclassified", "perturbation"):
            raise ValidationError("oracle must be 'misclassified' or 'perturbation'")
        if self.layers is not None:
            object.__setattr__(self, "layers", tuple(self.layers))
            if len(self.layers) != len(self.test_traces):
                raise ValidationError("layers must name each trace pair exactly once")

    def layer_names(self) -> tuple[str, ...]:
        """Report name per trace pair: explicit ``layers`` or test-file stems."""
        if self.layers is not None:
            return self.layers
        return tuple(Path(p).stem for p in self.test_traces)

    def input_paths(self) -> list[str]:
        return [
            *self.train_traces,
            self.train_labels,
            *self.test_traces,
            self.test_labels,
        ]

    def check_inputs_exist(self):
        for p in self.input_paths():
            if not Path(p).is_file():
                raise MissingFileError(f"input file not found: {p}")

    def dsa_config(self, variant: str) -> DsaConfig:
        if self.delta is not None:
            hood = NeighborhoodSpec.radius(self.delta)
        else:
            hood = NeighborhoodSpec.k_nearest(self.k)
        return DsaConfig(
            variant=DsaVariant(variant),
            neighborhood=hood,
            class_reference=self.class_reference,
            normalization=self.normalization,
            zero_denominator_policy=self.zero_denominator_policy,
            include_anchor=self.include_anchor,
            exclude_self_rows=self.exclude_self_rows,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["train_traces"] = list(self.train_traces)
        d["test_traces"] = list(self.test_traces)
        d["variants"] = list(self.variants)
        if self.layers is not None:
            d["layers"] = list(self.layers)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown manifest fields: {sorted(extra)}")
        return cls(**d)


def save_manifest(manifest: RunManifest, path) -> None:
    try:
        Path(path).write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write manifest {path}: {exc}") from exc


def load_manifest(path) -> RunManifest:
    p = Path(path)
    if not p.is_file():
        raise MissingFileError(f"manifest not found: {path}")
    try:
        raw = json.loads(p.read_text())
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError(f"manifest {path} must hold a JSON object")
    return RunManifest.from_dict(raw)


def _open_write(path):
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _read_rows(path, expected_header: tuple[str, ...]) -> list[list[str]]:
    p = Path(path)
    if not p.is_file():
        raise MissingFileError(f"file not found: {path}")
    try:
        with open(p, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != expected_header:
        raise ValidationError(
            f"{path}: expected header {','.join(expected_header)}"
        )
    return rows[1:]


def write_scores_csv(path, scores: list[DsaScore], true_labels, predicted_labels) -> None:
    """Per-sample score table, one row per test sample in input order."""
    true_labels = np.asarray(true_labels, dtype=np.int64)
    predicted_labels = np.asarray(predicted_labels, dtype=np.int64)
    if not (len(scores) == true_labels.shape[0] == predicted_labels.shape[0]):
        raise ValidationError("scores and label vectors must align")
    with _open_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(SCORE_COLUMNS)
        for i, s in enumerate(scores):
            w.writerow(
                [
                    i,
                    repr(float(s.value)),
                    repr(float(s.dist_a)),
                    repr(float(s.dist_b)),
                    int(s.anchor_a),
                    int(s.anchor_b),
                    int(true_labels[i]),
                    int(predicted_labels[i]),
                ]
            )


def read_scores_csv(path) -> dict[str, np.ndarray]:
    """Load a score table back into column arrays keyed by header name."""
    rows = _read_rows(path, SCORE_COLUMNS)
    if not rows:
        raise ValidationError(f"{path}: score table has no rows")
    cols = list(zip(*rows))
    out: dict[str, np.ndarray] = {}
    for name, values in zip(SCORE_COLUMNS, cols):
        if name in ("row", "anchor_a", "anchor_b", "true", "predicted"):
            out[name] = np.array([int(v) for v in values], dtype=np.int64)
        else:
            out[name] = np.array([float(v) for v in values], dtype=np.float64)
    return out


COVERAGE_COLUMNS = ("threshold", "coverage")
ACCURACY_COLUMNS = ("k", "accuracy")
ROC_COLUMNS = ("threshold", "fpr", "tpr")


def write_coverage_csv(path, curve: CoverageCurve) -> None:
    with _open_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(COVERAGE_COLUMNS)
        for t, c in zip(curve.thresholds, curve.coverage):
            w.writerow([repr(float(t)), repr(float(c))])


def read_coverage_csv(path) -> CoverageCurve:
    rows = _read_rows(path, COVERAGE_COLUMNS)
    t = np.array([float(r[0]) for r in rows])
    c = np.array([float(r[1]) for r in rows])
    return CoverageCurve(thresholds=t, coverage=c)


def write_accuracy_csv(path, points: list[tuple[int, float]]) -> None:
    with _open_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(ACCURACY_COLUMNS)
        for k, acc in points:
            w.writerow([int(k), repr(float(acc))])


def read_accuracy_csv(path) -> list[tuple[int, float]]:
    rows = _read_rows(path, ACCURACY_COLUMNS)
    return [(int(r[0]), float(r[1])) for r in rows]


def write_roc_csv(path, curve: RocCurve) -> None:
    with _open_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(ROC_COLUMNS)
        for t, f, tp in zip(curve.thresholds, curve.fpr, curve.tpr):
            w.writerow([repr(float(t)), repr(float(f)), repr(float(tp))])


def read_roc_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = _read_rows(path, ROC_COLUMNS)
    t = np.array([float(r[0]) for r in rows])
    f = np.array([float(r[1]) for r in rows])
    tp = np.array([float(r[2]) for r in rows])
    return t, f, tp


@dataclass
class EvalEntry:
    """Evaluation result for one (variant, layer) pair."""

    variant: str
    layer: str
    auc: float
    n_test: int
    n_corner: int
    scores_csv: str
    roc_csv: str
    coverage_csv: str
    accuracy_csv: str
    roc_points: list[tuple[float, float]]
    coverage_points: list[tuple[float, float]]
    accuracy_points: list[tuple[int, float]]
    svg_files: list[str] = field(default_factory=list)


def build_report(manifest: RunManifest, entries: list[EvalEntry], extra: dict | None = None) -> dict:
    """Assemble the JSON-serializable detection report.

    Deterministic except for the timestamp: given the same manifest and
    entries, every other byte of the serialized report is identical across
    runs.
    """
    report = {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config": manifest.to_dict(),
        "results": [
            {
                "variant": e.variant,
                "layer": e.layer,
                "auc": e.auc,
                "n_test": e.n_test,
                "n_corner": e.n_corner,
                "scores_csv": e.scores_csv,
                "roc_csv": e.roc_csv,
                "coverage_csv": e.coverage_csv,
                "accuracy_csv": e.accuracy_csv,
                "roc_points": [[f, t] for f, t in e.roc_points],
                "coverage_points": [[t, c] for t, c in e.coverage_points],
                "accuracy_points": [[k, a] for k, a in e.accuracy_points],
                "svg_files": list(e.svg_files),
            }
            for e in entries
        ],
    }
    if extra:
        report.update(extra)
    return report


def write_report_json(report: dict, path) -> None:
    try:
        Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write report {path}: {exc}") from exc


def load_report_json(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise MissingFileError(f"report not found: {path}")
    try:
        return json.loads(p.read_text())
    except OSError as exc:
        raise IoError(f"cannot read report {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"report {path} is not valid JSON: {exc}") from exc
