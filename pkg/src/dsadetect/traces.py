"""Domain types for activation traces and class labels.

An activation trace is the vector of a model's neuron activation values for
one input at a chosen layer. A trace set stacks those vectors into a dense
``n_samples x n_neurons`` matrix. All arrays are held as read-only float64;
files store float32 (see :mod:`dsadetect.traceio`), widened on load so that
distance arithmetic runs at full precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CountMismatchError,
    DimensionMismatchError,
    LabelRangeError,
    NonFiniteValueError,
)

#: A single activation trace: a 1-D float64 vector, one entry per neuron.
ActivationTrace = np.ndarray

VARIANCE_FLOOR = 1e-12
LOW_VARIANCE_DEFAULT = 1e-5


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def as_trace(values) -> ActivationTrace:
    """Validate and coerce one activation trace to a read-only float64 vector.

    Raises
    ------
    DimensionMismatchError
        If the input is not 1-D or has zero length.
    NonFiniteValueError
        If any entry is NaN or infinite.
    """
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatchError(
            f"activation trace must be a non-empty 1-D vector, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError("activation trace contains non-finite values")
    return _freeze(arr)


@dataclass(frozen=True)
class TraceSet:
    """A dense matrix of activation traces, one row per sample.

    Parameters
    ----------
    traces : array-like, shape (n_samples, n_neurons)
        Real-valued activation matrix. Copied, widened to float64, and made
        read-only. Every entry must be finite.
    layer_name : str
        Tag identifying which layer the traces were captured at.
    """

    traces: np.ndarray
    layer_name: str = "layer"

    def __post_init__(self):
        arr = np.array(self.traces, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise DimensionMismatchError(
                f"trace matrix must be 2-D, got shape {arr.shape}"
            )
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionMismatchError(
                f"trace matrix needs at least one sample and one neuron, got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValueError("trace matrix contains non-finite values")
        object.__setattr__(self, "traces", _freeze(arr))

    @property
    def n_samples(self) -> int:
        return self.traces.shape[0]

    @property
    def n_neurons(self) -> int:
        return self.traces.shape[1]

    def row(self, i: int) -> ActivationTrace:
        return self.traces[i]


def _check_labels(name: str, labels, n_samples: int, n_classes: int) -> np.ndarray:
    arr = np.array(labels, dtype=np.int64, copy=True)
    if arr.ndim != 1 or arr.shape[0] != n_samples:
        raise CountMismatchError(
            f"{name} has {arr.shape[0] if arr.ndim == 1 else arr.shape} entries, "
            f"expected {n_samples}"
        )
    if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
        raise LabelRangeError(
            f"{name} contains ids outside [0, {n_classes})"
        )
    return _freeze(arr)


@dataclass(frozen=True)
class LabeledTraceSet:
    """Traces joined with true labels and the model's predicted classes.

    ``true_labels[i]`` and ``predicted_labels[i]`` both refer to row ``i`` of
    ``traces``. A sample is a detectable corner case when the two disagree.
    """

    traces: TraceSet
    true_labels: np.ndarray
    predicted_labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        if self.n_classes < 1:
            raise LabelRangeError("n_classes must be positive")
        n = self.traces.n_samples
        object.__setattr__(
            self, "true_labels", _check_labels("true_labels", self.true_labels, n, self.n_classes)
        )
        object.__setattr__(
            self,
            "predicted_labels",
            _check_labels("predicted_labels", self.predicted_labels, n, self.n_classes),
        )

    @property
    def n_samples(self) -> int:
        return self.traces.n_samples

    @property
    def misclassified(self) -> np.ndarray:
        """Boolean mask of rows whose prediction disagrees with the true label."""
        return self.true_labels != self.predicted_labels

    def labels_for(self, reference: str) -> np.ndarray:
        """Return the label vector selected by a class-reference mode.

        ``"predicted"`` uses the model's outputs, ``"true"`` the ground truth.
        """
        if reference == "predicted":
            return self.predicted_labels
        if reference == "true":
            return self.true_labels
        raise ValueError(f"unknown class reference {reference!r}")

    def check_training_coverage(self) -> None:
        """Require every class id to occur among the true labels.

        Training sets must exercise all classes; test sets are exempt, so this
        is a separate check rather than a constructor invariant.
        """
        present = np.unique(self.true_labels)
        missing = sorted(set(range(self.n_classes)) - set(present.tolist()))
        if missing:
            raise LabelRangeError(
                f"training set has no samples for class ids {missing}"
            )


@dataclass(frozen=True)
class ClassPartition:
    """Row indices of a trace set grouped by class id.

    ``members[c]`` holds the ascending row indices whose class is ``c``. The
    lists are disjoint and together cover exactly ``range(n_samples)``.
    """

    members: tuple[np.ndarray, ...]
    n_samples: int

    @classmethod
    def from_labels(cls, labels: np.ndarray, n_classes: int) -> "ClassPartition":
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
            raise LabelRangeError(f"labels outside [0, {n_classes})")
        members = tuple(
            _freeze(np.flatnonzero(labels == c).astype(np.int64)) for c in range(n_classes)
        )
        return cls(members=members, n_samples=labels.shape[0])

    @property
    def n_classes(self) -> int:
        return len(self.members)

    def size(self, class_id: int) -> int:
        return self.members[class_id].shape[0]


@dataclass(frozen=True)
class TraceStats:
    """Per-neuron mean and standard deviation of a training trace set."""

    mean: np.ndarray
    stddev: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64, copy=True)
        std = np.array(self.stddev, dtype=np.float64, copy=True)
        if mean.ndim != 1 or std.shape != mean.shape:
            raise DimensionMismatchError("stats vectors must be aligned 1-D arrays")
        if np.any(std < 0):
            raise ValueError("stddev entries must be nonnegative")
        object.__setattr__(self, "mean", _freeze(mean))
        object.__setattr__(self, "stddev", _freeze(std))

    @property
    def n_neurons(self) -> int:
        return self.mean.shape[0]


def compute_trace_stats(train: TraceSet) -> TraceStats:
    """Column means and population standard deviations of a training set."""
    return TraceStats(
        mean=train.traces.mean(axis=0),
        stddev=train.traces.std(axis=0),
    )


def normalize_traces(traces: TraceSet, stats: TraceStats) -> TraceSet:
    """Standardize each column as ``(v - mean) / max(stddev, floor)``.

    The stats must come from the training set; applying them to test traces
    keeps test preprocessing a function of training data only. Zero-variance
    columns map to zero rather than blowing up.
    """
    if stats.n_neurons != traces.n_neurons:
        raise DimensionMismatchError(
            f"stats cover {stats.n_neurons} neurons, traces have {traces.n_neurons}"
        )
    denom = np.maximum(stats.stddev, VARIANCE_FLOOR)
    return TraceSet((traces.traces - stats.mean) / denom, layer_name=traces.layer_name)


def low_variance_columns(stats: TraceStats, threshold: float = LOW_VARIANCE_DEFAULT) -> np.ndarray:
    """Boolean mask of columns whose training stddev falls below ``threshold``.

    Dead or near-constant neurons carry no distance information; dropping them
    is optional plumbing, off by default in every pipeline.
    """
    return stats.stddev < threshold


def drop_columns(traces: TraceSet, mask: np.ndarray) -> TraceSet:
    """Remove the masked columns from a trace set."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (traces.n_neurons,):
        raise DimensionMismatchError("column mask length must equal n_neurons")
    keep = ~mask
    if not keep.any():
        raise DimensionMismatchError("column filter would drop every neuron")
    return TraceSet(traces.traces[:, keep], layer_name=traces.layer_name)
