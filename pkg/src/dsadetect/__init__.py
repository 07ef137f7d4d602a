"""Corner-case input detection for classifiers via surprise scores.

The toolkit consumes activation traces (one vector per input, captured at a
chosen layer of any trained classifier) plus true/predicted labels, computes
distance-based surprise scores in four variants, and evaluates how well the
scores separate corner-case inputs from normal ones.

Typical flow::

    from dsadetect import (
        DsaConfig, DsaVariant, LabeledTraceSet, TraceSet,
        batch_dsa, as_samples, roc_auc,
    )

    train = LabeledTraceSet(TraceSet(train_rows), y_train, yhat_train, n_classes)
    test = LabeledTraceSet(TraceSet(test_rows), y_test, yhat_test, n_classes)
    scores = batch_dsa(train, test, DsaConfig(variant=DsaVariant.DSA3))
    curve = roc_auc(as_samples([s.value for s in scores], test.misclassified))
"""

__version__ = "0.1.0"

from .dsa import (
    DEFAULT_K,
    DsaConfig,
    DsaScore,
    DsaVariant,
    NeighborhoodSpec,
    batch_dsa,
    dsa0,
    dsa1,
    dsa2,
    dsa3,
    score_rows,
)
from .errors import (
    DegenerateDataError,
    DsaDetectError,
    IoError,
    ValidationError,
)
from .metrics import (
    CoverageCurve,
    RocCurve,
    ScoredSample,
    accuracy_curve,
    as_samples,
    coverage,
    coverage_curve,
    roc_auc,
)
from .nnindex import NeighborHit, NeighborIndex, build_index
from .traceio import (
    load_labels,
    load_trace_file,
    save_labels,
    save_labels_csv,
    save_trace_csv,
    save_trace_file,
)
from .traces import (
    LabeledTraceSet,
    TraceSet,
    TraceStats,
    compute_trace_stats,
    drop_columns,
    low_variance_columns,
    normalize_traces,
)

__all__ = [
    "__version__",
    "DEFAULT_K",
    "DsaConfig",
    "DsaScore",
    "DsaVariant",
    "NeighborhoodSpec",
    "batch_dsa",
    "dsa0",
    "dsa1",
    "dsa2",
    "dsa3",
    "score_rows",
    "DegenerateDataError",
    "DsaDetectError",
    "IoError",
    "ValidationError",
    "CoverageCurve",
    "RocCurve",
    "ScoredSample",
    "accuracy_curve",
    "as_samples",
    "coverage",
    "coverage_curve",
    "roc_auc",
    "NeighborHit",
    "NeighborIndex",
    "build_index",
    "load_labels",
    "load_trace_file",
    "save_labels",
    "save_labels_csv",
    "save_trace_csv",
    "save_trace_file",
    "LabeledTraceSet",
    "TraceSet",
    "TraceStats",
    "compute_trace_stats",
    "drop_columns",
    "low_variance_columns",
    "normalize_traces",
]
