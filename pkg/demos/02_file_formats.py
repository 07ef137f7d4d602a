"""File formats: binary trace/label files and their CSV twins.

Traces travel between tools as little-endian binary files with a fixed
24-byte header (magic "ATRC", version, row count, column count) followed
by float32 values in row-major order. Labels use a 16-byte "ALBL" header
followed by (true, predicted) uint32 pairs. Anything ending in .csv loads
through the plain-text route instead, so hand-written spreadsheets work
too. Run it directly: python demos/02_file_formats.py
"""

import struct
import tempfile
from pathlib import Path

import numpy as np

from dsadetect.traceio import (
    load_labels,
    load_trace_file,
    save_labels,
    save_trace_csv,
    save_trace_file,
)
from dsadetect.traces import TraceSet

workdir = Path(tempfile.mkdtemp(prefix="formats_"))

# A small trace matrix: five samples, three neurons.
rows = np.array(
    [
        [0.0, 1.5, -2.25],
        [3.125, 0.5, 0.0],
        [-1.0, -1.0, 4.75],
        [0.25, 2.0, 1.0],
        [9.5, -0.5, 0.125],
    ]
)
traces = TraceSet(rows, layer_name="hidden1")

binary_path = workdir / "hidden1.atrc"
save_trace_file(traces, binary_path)
blob = binary_path.read_bytes()
print(f"wrote {binary_path} ({len(blob)} bytes)")

# The header is exactly 24 bytes; everything after is float32 payload.
magic, version, n_samples, n_neurons = struct.unpack("<4sIQQ", blob[:24])
print(f"magic={magic} version={version} n_samples={n_samples} n_neurons={n_neurons}")
print(f"payload bytes: {len(blob) - 24} = {n_samples} x {n_neurons} x 4")

# Loading widens float32 back to float64. Values that are exactly
# representable in float32 (like the ones above) round-trip bit for bit.
loaded = load_trace_file(binary_path)
print(f"round trip exact: {np.array_equal(loaded.traces, rows)}")
print(f"layer name from file stem: {loaded.layer_name!r}")

# Labels: one (true, predicted) pair per sample.
true = [0, 1, 1, 0, 1]
pred = [0, 1, 0, 0, 1]
label_path = workdir / "labels.albl"
save_labels(true, pred, label_path)
got_true, got_pred = load_labels(label_path, 5)
print(f"labels round trip: true={[int(v) for v in got_true]} "
      f"pred={[int(v) for v in got_pred]}")

# The CSV route: same data, headers n0..n2, full float64 text precision.
csv_path = workdir / "hidden1.csv"
save_trace_csv(traces, csv_path)
print("\ncsv contents:")
print(csv_path.read_text())
from_csv = load_trace_file(csv_path)  # dispatched on the .csv suffix
print(f"csv round trip exact: {np.array_equal(from_csv.traces, rows)}")
