import numpy as np
import pytest

from dsadetect.errors import EmptyClassError, EmptyComplementError
from dsadetect.nnindex import NeighborIndex, build_index
from dsadetect.traces import TraceSet
from tests.conftest import labeled_from_arrays, random_instance, random_queries


def brute_nearest(rows, eligible, query, exclude=frozenset()):
    """Reference scan: lowest squared distance, ties to the lowest row id."""
    best_row, best_d2 = -1, np.inf
    for r in eligible:
        if r in exclude:
            continue
        d2 = float(np.sum((rows[r] - query) ** 2))
        if d2 < best_d2 or (d2 == best_d2 and r < best_row):
            best_row, best_d2 = r, d2
    return best_row, best_d2


def make_index(rows, labels, n_classes):
    return NeighborIndex(TraceSet(rows), labels, n_classes)


def test_batch_nearest_in_class_matches_scan(rng):
    for _ in range(10):
        rows, labels, n_classes = random_instance(rng, n_max=80, d_max=6)
        index = make_index(rows, labels, n_classes)
        queries = random_queries(rng, rows, 25)
        for c in range(n_classes):
            eligible = [r for r in range(len(rows)) if labels[r] == c]
            got_rows, got_dist = index.batch_nearest_in_class(queries, c)
            for i, q in enumerate(queries):
                row, d2 = brute_nearest(rows, eligible, q)
                assert got_rows[i] == row
                assert got_dist[i] == pytest.approx(np.sqrt(d2), rel=1e-12, abs=1e-12)


def test_batch_nearest_outside_class_matches_scan(rng):
    for _ in range(10):
        rows, labels, n_classes = random_instance(rng, n_max=80, d_max=6)
        index = make_index(rows, labels, n_classes)
        queries = random_queries(rng, rows, 25)
        for c in range(n_classes):
            eligible = [r for r in range(len(rows)) if labels[r] != c]
            got_rows, got_dist = index.batch_nearest_outside_class(queries, c)
            for i, q in enumerate(queries):
                row, d2 = brute_nearest(rows, eligible, q)
                assert got_rows[i] == row
                assert got_dist[i] == pytest.approx(np.sqrt(d2), rel=1e-12, abs=1e-12)


def test_exclusion_rows_respected(rng):
    rows, labels, n_classes = random_instance(rng, n_max=60, d_max=5)
    index = make_index(rows, labels, n_classes)
    n = len(rows)
    # query each training row against its own class with itself excluded
    for c in range(n_classes):
        members = [r for r in range(n) if labels[r] == c]
        if len(members) < 2:
            continue
        queries = rows[members]
        exclude = np.array(members)
        got_rows, got_dist = index.batch_nearest_in_class(
            queries, c, exclude_rows=exclude
        )
        for i, q_row in enumerate(members):
            row, d2 = brute_nearest(rows, members, rows[q_row], exclude={q_row})
            assert got_rows[i] == row
            assert got_rows[i] != q_row
            assert got_dist[i] == pytest.approx(np.sqrt(d2), rel=1e-12, abs=1e-12)


def test_exact_duplicate_ties_take_lowest_row_id():
    rows = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0]])
    labels = [0, 1, 1, 1]
    index = make_index(rows, labels, 2)
    hit = index.nearest_in_class(np.array([1.0, 1.0]), 1)
    assert hit.index == 1
    assert hit.distance == 0.0
    # excluding the lowest id moves to the next lowest
    got_rows, _ = index.batch_nearest_in_class(
        np.array([[1.0, 1.0]]), 1, exclude_rows=np.array([1])
    )
    assert got_rows[0] == 2


def test_self_query_returns_zero_distance(rng):
    rows, labels, n_classes = random_instance(rng, n_max=50, d_max=4)
    index = make_index(rows, labels, n_classes)
    for r in range(0, len(rows), 7):
        hit = index.nearest_in_class(rows[r], labels[r])
        assert hit.distance == 0.0


def test_empty_class_raises():
    rows = np.array([[0.0], [1.0]])
    index = make_index(rows, [0, 0], 3)
    with pytest.raises(EmptyClassError):
        index.batch_nearest_in_class(np.array([[0.5]]), 1)
    with pytest.raises(EmptyClassError):
        index.class_centroid(2)


def test_empty_complement_raises():
    rows = np.array([[0.0], [1.0]])
    index = make_index(rows, [0, 0], 1)
    with pytest.raises(EmptyComplementError):
        index.batch_nearest_outside_class(np.array([[0.5]]), 0)


def test_class_centroid_matches_mean(rng):
    rows, labels, n_classes = random_instance(rng, n_max=70, d_max=5)
    index = make_index(rows, labels, n_classes)
    for c in range(n_classes):
        members = rows[np.array(labels) == c]
        assert np.allclose(index.class_centroid(c), members.mean(axis=0), atol=1e-12)


def test_k_nearest_in_class_matches_sorted_scan(rng):
    for _ in range(8):
        rows, labels, n_classes = random_instance(rng, n_max=60, d_max=5)
        index = make_index(rows, labels, n_classes)
        queries = random_queries(rng, rows, 10)
        for q in queries:
            for c in range(n_classes):
                members = [r for r in range(len(rows)) if labels[r] == c]
                order = sorted(
                    members, key=lambda r: (float(np.sum((rows[r] - q) ** 2)), r)
                )
                for k in (1, 2, 5, len(members), len(members) + 3):
                    got = index.k_nearest_in_class(q, c, k)
                    assert [h.index for h in got] == order[: min(k, len(members))]
                    dists = [h.distance for h in got]
                    assert dists == sorted(dists)


def test_k_nearest_respects_exclusion(rng):
    rows, labels, n_classes = random_instance(rng, n_max=40, d_max=4)
    index = make_index(rows, labels, n_classes)
    c = 0
    members = [r for r in range(len(rows)) if labels[r] == c]
    anchor = members[0]
    got = index.k_nearest_in_class(rows[anchor], c, 3, exclude=anchor)
    got_ids = [h.index for h in got]
    assert anchor not in got_ids
    order = sorted(
        (r for r in members if r != anchor),
        key=lambda r: (float(np.sum((rows[r] - rows[anchor]) ** 2)), r),
    )
    assert got_ids == order[:3]


def test_k_nearest_rejects_nonpositive_k():
    index = make_index(np.array([[0.0]]), [0], 1)
    with pytest.raises(ValueError):
        index.k_nearest_in_class(np.array([0.0]), 0, 0)


def test_radius_in_class_strict_boundary():
    rows = np.array([[0.0], [1.0], [2.0], [3.0]])
    labels = [0, 0, 0, 0]
    index = make_index(rows, labels, 1)
    # distance exactly delta is excluded
    got = index.radius_in_class(np.array([0.0]), 0, delta=2.0)
    assert [h.index for h in got] == [0, 1]
    got = index.radius_in_class(np.array([0.0]), 0, delta=2.0000001)
    assert [h.index for h in got] == [0, 1, 2]
    assert index.radius_in_class(np.array([10.0]), 0, delta=0.5) == []
    with pytest.raises(ValueError):
        index.radius_in_class(np.array([0.0]), 0, delta=0.0)


def test_radius_matches_scan(rng):
    rows, labels, n_classes = random_instance(rng, n_max=60, d_max=5)
    index = make_index(rows, labels, n_classes)
    queries = random_queries(rng, rows, 10)
    for q in queries:
        for c in range(n_classes):
            for delta in (0.1, 1.0, 5.0):
                expect = sorted(
                    r
                    for r in range(len(rows))
                    if labels[r] == c and float(np.linalg.norm(rows[r] - q)) < delta
                )
                got = sorted(h.index for h in index.radius_in_class(q, c, delta))
                assert got == expect


def test_batch_and_single_agree(rng):
    rows, labels, n_classes = random_instance(rng, n_max=60, d_max=5)
    index = make_index(rows, labels, n_classes)
    queries = random_queries(rng, rows, 15)
    for c in range(n_classes):
        rows_in, dist_in = index.batch_nearest_in_class(queries, c)
        rows_out, dist_out = index.batch_nearest_outside_class(queries, c)
        for i, q in enumerate(queries):
            one_in = index.nearest_in_class(q, c)
            one_out = index.nearest_outside_class(q, c)
            assert (one_in.index, one_in.distance) == (rows_in[i], dist_in[i])
            assert (one_out.index, one_out.distance) == (rows_out[i], dist_out[i])


def test_results_deterministic_across_rebuilds(rng):
    rows, labels, n_classes = random_instance(rng, n_max=80, d_max=6)
    queries = random_queries(rng, rows, 20)
    a = make_index(rows, labels, n_classes)
    b = make_index(rows.copy(), list(labels), n_classes)
    for c in range(n_classes):
        ra, da = a.batch_nearest_in_class(queries, c)
        rb, db = b.batch_nearest_in_class(queries, c)
        assert np.array_equal(ra, rb)
        assert np.array_equal(da, db)


def test_large_block_boundary(rng):
    # force spans beyond one query block to exercise the blocked path
    rows = rng.normal(size=(700, 3))
    labels = rng.integers(0, 2, 700)
    index = make_index(rows, labels, 2)
    queries = rows[:300] + rng.normal(scale=0.01, size=(300, 3))
    got_rows, _ = index.batch_nearest_in_class(queries, 0)
    eligible = [r for r in range(700) if labels[r] == 0]
    for i in range(0, 300, 37):
        row, _ = brute_nearest(rows, eligible, queries[i])
        assert got_rows[i] == row


def test_build_index_uses_requested_label_kind(rng):
    rows, labels, n_classes = random_instance(rng, n_max=40, d_max=4)
    true = labels
    pred = np.array(labels)
    pred[0] = (pred[0] + 1) % n_classes
    labeled = labeled_from_arrays(rows, true, pred, n_classes)
    by_pred = build_index(labeled, class_reference="predicted")
    by_true = build_index(labeled, class_reference="true")
    assert by_pred.row_classes[0] == pred[0]
    assert by_true.row_classes[0] == true[0]


def test_row_classes_are_frozen(rng):
    rows, labels, n_classes = random_instance(rng, n_max=20, d_max=3)
    index = make_index(rows, labels, n_classes)
    with pytest.raises(ValueError):
        index.row_classes[0] = 99
