import numpy as np
import pytest

from dsadetect.traces import LabeledTraceSet, TraceSet


def random_instance(rng, n_max=300, d_max=16, c_max=5, with_duplicates=True):
    """One random training set: (rows, labels, n_classes).

    Every class is nonempty; a fraction of rows are exact duplicates so tie
    and zero-distance paths get exercised.
    """
    n_classes = int(rng.integers(2, c_max + 1))
    d = int(rng.integers(1, d_max + 1))
    n = int(rng.integers(n_classes, n_max + 1))
    labels = np.concatenate(
        [np.arange(n_classes), rng.integers(0, n_classes, n - n_classes)]
    ).astype(np.int64)
    rng.shuffle(labels)
    rows = rng.normal(size=(n, d)) * float(rng.uniform(0.5, 2.0))
    if with_duplicates and n >= 8:
        count = n // 8
        src = rng.integers(0, n, count)
        dst = rng.integers(0, n, count)
        rows[dst] = rows[src]
    return rows, labels, n_classes


def random_queries(rng, rows, n_queries):
    """Query points: a mix of fresh draws and exact copies of training rows."""
    d = rows.shape[1]
    fresh = rng.normal(size=(n_queries, d))
    copies = rng.integers(0, rows.shape[0], n_queries)
    use_copy = rng.random(n_queries) < 0.3
    out = np.where(use_copy[:, None], rows[copies], fresh)
    return out


def labeled_from_arrays(rows, true_labels, predicted_labels, n_classes):
    return LabeledTraceSet(
        TraceSet(rows), true_labels, predicted_labels, n_classes
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
