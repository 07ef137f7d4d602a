"""Trace and label interchange formats.

Two little-endian binary formats plus a CSV fallback:

* ``ATRC`` trace file: magic ``b"ATRC"`` | version u32 = 1 | n_samples u64 |
  n_neurons u64 | payload of ``n_samples * n_neurons`` float32, row-major.
* ``ALBL`` label file: magic ``b"ALBL"`` | version u32 = 1 | n_samples u64 |
  per sample: true_label u32, predicted_label u32.

Files with a ``.csv`` suffix use the text fallback instead: traces as a
header row ``n0,n1,...`` with one sample per row; labels as a header
``true,predicted``. Binary payloads are float32 (compact at training-set
scale) and widen to float64 in memory; CSV keeps full float64 text.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    CountMismatchError,
    DimensionMismatchError,
    IoError,
    LabelRangeError,
    MissingFileError,
    NonFiniteValueError,
    TraceFormatError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)
from .traces import TraceSet

ATRC_MAGIC = b"ATRC"
ALBL_MAGIC = b"ALBL"
FORMAT_VERSION = 1

_ATRC_HEADER = struct.Struct("<4sIQQ")
_ALBL_HEADER = struct.Struct("<4sIQ")


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise TruncatedPayloadError(f"file ends inside {what} ({len(data)}/{n} bytes)")
    return data


def _open_read(path) -> object:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"no such file: {path}")
    try:
        return path.open("rb")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _is_csv(path) -> bool:
    return Path(path).suffix.lower() == ".csv"


def load_trace_file(path) -> TraceSet:
    """Load a trace set from an ATRC file (or CSV when the suffix is .csv).

    The returned matrix is bit-identical to the stored float32 payload,
    widened to float64. The layer name is taken from the file stem.

    Raises
    ------
    MissingFileError, BadMagicError, UnsupportedVersionError,
    TruncatedPayloadError, DimensionMismatchError, NonFiniteValueError
    """
    if _is_csv(path):
        return _load_trace_csv(path)
    with _open_read(path) as fh:
        header = _read_exact(fh, _ATRC_HEADER.size, "header")
        magic, version, n_samples, n_neurons = _ATRC_HEADER.unpack(header)
        if magic != ATRC_MAGIC:
            raise BadMagicError(f"expected magic {ATRC_MAGIC!r}, found {magic!r}")
        if version != FORMAT_VERSION:
            raise UnsupportedVersionError(f"unsupported trace format version {version}")
        if n_samples < 1 or n_neurons < 1:
            raise DimensionMismatchError(
                f"header declares {n_samples} samples x {n_neurons} neurons"
            )
        count = n_samples * n_neurons
        payload = _read_exact(fh, count * 4, "float32 payload")
        if fh.read(1):
            raise TraceFormatError("trailing bytes after declared payload")
    flat = np.frombuffer(payload, dtype="<f4", count=count)
    matrix = flat.astype(np.float64).reshape(n_samples, n_neurons)
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteValueError("stored traces contain non-finite values")
    return TraceSet(matrix, layer_name=Path(path).stem)


def save_trace_file(trace_set: TraceSet, path) -> None:
    """Write a trace set as an ATRC file.

    Values are stored as float32; a value that cannot be represented finitely
    at that precision is rejected before anything is written.
    """
    with np.errstate(over="ignore"):
        narrowed = trace_set.traces.astype("<f4")
    if not np.all(np.isfinite(narrowed)):
        raise NonFiniteValueError("traces do not fit float32 finitely")
    header = _ATRC_HEADER.pack(
        ATRC_MAGIC, FORMAT_VERSION, trace_set.n_samples, trace_set.n_neurons
    )
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(narrowed.tobytes(order="C"))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_labels(path, n_samples: int, n_classes: int | None = None):
    """Load aligned (true, predicted) label vectors from an ALBL or CSV file.

    Raises
    ------
    CountMismatchError
        If the file's sample count differs from ``n_samples``.
    LabelRangeError
        If ``n_classes`` is given and a label falls outside [0, n_classes).
    """
    if _is_csv(path):
        true, predicted = _load_labels_csv(path)
    else:
        with _open_read(path) as fh:
            header = _read_exact(fh, _ALBL_HEADER.size, "header")
            magic, version, stored = _ALBL_HEADER.unpack(header)
            if magic != ALBL_MAGIC:
                raise BadMagicError(f"expected magic {ALBL_MAGIC!r}, found {magic!r}")
            if version != FORMAT_VERSION:
                raise UnsupportedVersionError(f"unsupported label format version {version}")
            payload = _read_exact(fh, stored * 8, "label pairs")
            if fh.read(1):
                raise TraceFormatError("trailing bytes after declared payload")
        pairs = np.frombuffer(payload, dtype="<u4").reshape(stored, 2)
        true = pairs[:, 0].astype(np.int64)
        predicted = pairs[:, 1].astype(np.int64)
    if true.shape[0] != n_samples:
        raise CountMismatchError(
            f"label file has {true.shape[0]} samples, traces have {n_samples}"
        )
    if n_classes is not None:
        for name, arr in (("true", true), ("predicted", predicted)):
            if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
                raise LabelRangeError(f"{name} labels outside [0, {n_classes})")
    return true, predicted


def save_labels(true_labels, predicted_labels, path) -> None:
    """Write aligned label vectors as an ALBL file."""
    true = np.asarray(true_labels, dtype=np.int64)
    predicted = np.asarray(predicted_labels, dtype=np.int64)
    if true.shape != predicted.shape or true.ndim != 1:
        raise CountMismatchError("label vectors must be aligned 1-D arrays")
    if true.size and (min(true.min(), predicted.min()) < 0 or max(true.max(), predicted.max()) > 0xFFFFFFFF):
        raise LabelRangeError("labels must fit an unsigned 32-bit integer")
    pairs = np.empty((true.shape[0], 2), dtype="<u4")
    pairs[:, 0] = true
    pairs[:, 1] = predicted
    try:
        with open(path, "wb") as fh:
            fh.write(_ALBL_HEADER.pack(ALBL_MAGIC, FORMAT_VERSION, true.shape[0]))
            fh.write(pairs.tobytes(order="C"))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# --- CSV fallback ----------------------------------------------------------


def _load_trace_csv(path) -> TraceSet:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"no such file: {path}")
    rows: list[list[float]] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not header or not header[0].startswith("n"):
            raise TraceFormatError(f"{path}: expected a 'n0,n1,...' header row")
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise DimensionMismatchError(
                    f"{path}:{lineno}: row has {len(row)} fields, header has {width}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise TraceFormatError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise DimensionMismatchError(f"{path}: no sample rows")
    return TraceSet(np.array(rows, dtype=np.float64), layer_name=path.stem)


def save_trace_csv(trace_set: TraceSet, path) -> None:
    """Write a trace set as CSV (full float64 text, header ``n0,n1,...``)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"n{i}" for i in range(trace_set.n_neurons)])
        for row in trace_set.traces:
            writer.writerow([repr(float(v)) for v in row])


def _load_labels_csv(path):
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"no such file: {path}")
    true: list[int] = []
    predicted: list[int] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["true", "predicted"]:
            raise TraceFormatError(f"{path}: expected a 'true,predicted' header row")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                true.append(int(row[0]))
                predicted.append(int(row[1]))
            except (ValueError, IndexError) as exc:
                raise TraceFormatError(f"{path}:{lineno}: {exc}") from exc
    return np.array(true, dtype=np.int64), np.array(predicted, dtype=np.int64)


def save_labels_csv(true_labels, predicted_labels, path) -> None:
    """Write aligned label vectors as CSV with a ``true,predicted`` header."""
    true = np.asarray(true_labels, dtype=np.int64)
    predicted = np.asarray(predicted_labels, dtype=np.int64)
    if true.shape != predicted.shape:
        raise CountMismatchError("label vectors must be aligned")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true", "predicted"])
        for t, p in zip(true.tolist(), predicted.tolist()):
            writer.writerow([t, p])
