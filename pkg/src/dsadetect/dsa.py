"""Distance-based surprise adequacy scores, four variants.

Every variant is a ratio ``dist_a / dist_b`` of Euclidean distances in
activation-trace space, differing in what the two distances are measured
against:

* ``dsa0`` - original definition: ``dist_a`` from the input to its nearest
  same-class training row, ``dist_b`` from that row to its own nearest
  other-class row.
* ``dsa1`` - ``dist_b`` measured from the input itself to its nearest
  other-class row.
* ``dsa2`` - both distances measured against class centroids: the input's
  own class for the numerator, the class of its nearest other-class row for
  the denominator.
* ``dsa3`` - like ``dsa2`` but with local descriptors: means of small
  neighborhoods (k nearest or radius) around the two nearest-row anchors.

A duplicate of a training point is minimally surprising, so ``dist_a == 0``
forces a score of zero even when ``dist_b == 0``; a positive numerator over a
zero denominator yields an infinity sentinel (or an error under the strict
policy) that sorts above every finite score.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    CountMismatchError,
    DimensionMismatchError,
    EmptyClassError,
    EmptyNeighborhoodError,
    ZeroDenominatorError,
)
from .nnindex import QUERY_BLOCK, NeighborIndex
from .traces import LabeledTraceSet, compute_trace_stats, normalize_traces

#: Neighborhood size the third variant defaults to.
DEFAULT_K = 20

THREADS_ENV = "SADL_DSA_THREADS"


class DsaVariant(str, Enum):
    DSA0 = "dsa0"
    DSA1 = "dsa1"
    DSA2 = "dsa2"
    DSA3 = "dsa3"


@dataclass(frozen=True)
class NeighborhoodSpec:
    """How the local-descriptor variant collects rows around an anchor."""

    mode: str  # "knn" or "radius"
    k: int | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.mode == "knn":
            if self.k is None or self.k < 1:
                raise ValueError("k-nearest neighborhoods need k >= 1")
        elif self.mode == "radius":
            if self.delta is None or not self.delta > 0:
                raise ValueError("radius neighborhoods need delta > 0")
        else:
            raise ValueError(f"unknown neighborhood mode {self.mode!r}")

    @classmethod
    def k_nearest(cls, k: int) -> "NeighborhoodSpec":
        return cls(mode="knn", k=k)

    @classmethod
    def radius(cls, delta: float) -> "NeighborhoodSpec":
        return cls(mode="radius", delta=delta)


@dataclass(frozen=True)
class DsaConfig:
    """Free parameters of a scoring run.

    ``class_reference`` decides which label vector stands for "the class of"
    a sample, both when partitioning the training rows and when picking the
    class of each test input: the model's predictions (default, usable when
    ground truth is unknown) or the true labels.
    """

    variant: DsaVariant = DsaVariant.DSA3
    neighborhood: NeighborhoodSpec = field(
        default_factory=lambda: NeighborhoodSpec.k_nearest(DEFAULT_K)
    )
    class_reference: str = "predicted"
    normalization: bool = False
    zero_denominator_policy: str = "infinity"
    include_anchor: bool = True
    exclude_self_rows: bool = False

    def __post_init__(self):
        if self.class_reference not in ("predicted", "true"):
            raise ValueError("class_reference must be 'predicted' or 'true'")
        if self.zero_denominator_policy not in ("infinity", "error"):
            raise ValueError("zero_denominator_policy must be 'infinity' or 'error'")
        if not isinstance(self.variant, DsaVariant):
            object.__setattr__(self, "variant", DsaVariant(self.variant))


@dataclass(frozen=True)
class DsaScore:
    """Score of one input plus the raw material it was computed from.

    ``anchor_a`` is the input's nearest same-class training row. ``anchor_b``
    is the other-class reference row: for ``dsa0`` the nearest other-class
    row of ``anchor_a``, for every other variant the input's own nearest
    other-class row. ``value`` is ``dist_a / dist_b`` with the zero-numerator
    and zero-denominator conventions described in the module docstring.
    """

    value: float
    dist_a: float
    dist_b: float
    anchor_a: int
    anchor_b: int


def _worker_count(n_tasks: int) -> int:
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        workers = max(1, int(env))
    else:
        workers = os.cpu_count() or 1
    return max(1, min(workers, n_tasks))


def _ratio_values(dist_a: np.ndarray, dist_b: np.ndarray, policy: str, rows: np.ndarray) -> np.ndarray:
    bad = (dist_a > 0) & (dist_b == 0)
    if policy == "error" and bad.any():
        offender = int(rows[np.flatnonzero(bad)[0]])
        raise ZeroDenominatorError(
            f"row {offender}: positive numerator over zero other-class distance"
        )
    safe = np.where(dist_b == 0, 1.0, dist_b)
    values = dist_a / safe
    values[bad] = np.inf
    values[dist_a == 0] = 0.0
    return values


def _dist_rows_to_points(rows: np.ndarray, points: np.ndarray) -> np.ndarray:
    diff = rows - points
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _neighborhood_mean(
    index: NeighborIndex, anchor_row: int, spec: NeighborhoodSpec, include_anchor: bool
) -> np.ndarray:
    """Mean trace of the neighborhood around one training row, in its class."""
    class_id = int(index.row_classes[anchor_row])
    exclude = None if include_anchor else anchor_row
    if spec.mode == "knn":
        try:
            hits = index.k_nearest_in_class(
                index.traces.traces[anchor_row], class_id, spec.k, exclude=exclude
            )
        except EmptyClassError as exc:
            raise EmptyNeighborhoodError(str(exc)) from exc
    else:
        hits = index.radius_in_class(
            index.traces.traces[anchor_row], class_id, spec.delta, exclude=exclude
        )
        if not hits:
            raise EmptyNeighborhoodError(
                f"no class-{class_id} rows within {spec.delta} of row {anchor_row}"
            )
    ids = [h.index for h in hits]
    return index.traces.traces[ids].mean(axis=0)


def _anchor_means(
    index: NeighborIndex, anchors: np.ndarray, spec: NeighborhoodSpec, include_anchor: bool
) -> np.ndarray:
    """Neighborhood means for each anchor row, deduplicated."""
    unique, inverse = np.unique(anchors, return_inverse=True)
    means = np.empty((unique.shape[0], index.n_neurons))
    for i, row in enumerate(unique.tolist()):
        means[i] = _neighborhood_mean(index, row, spec, include_anchor)
    return means[inverse]


def _score_block(
    index: NeighborIndex,
    rows: np.ndarray,
    class_id: int,
    config: DsaConfig,
    exclude_rows: np.ndarray | None,
    out_rows: np.ndarray,
):
    """Score one fixed block of queries that share a class; returns arrays."""
    variant = config.variant
    a_rows, a_dist = index.batch_nearest_in_class(rows, class_id, exclude_rows)

    if variant is DsaVariant.DSA0:
        unique, inverse = np.unique(a_rows, return_inverse=True)
        b_rows_u, b_dist_u = index.batch_nearest_outside_class(
            index.traces.traces[unique], class_id
        )
        dist_a = a_dist
        dist_b = b_dist_u[inverse]
        anchor_b = b_rows_u[inverse]
    else:
        b_rows, b_dist = index.batch_nearest_outside_class(rows, class_id)
        anchor_b = b_rows
        if variant is DsaVariant.DSA1:
            dist_a = a_dist
            dist_b = b_dist
        elif variant is DsaVariant.DSA2:
            dist_a = _dist_rows_to_points(rows, index.class_centroid(class_id)[None, :])
            b_classes = index.row_classes[b_rows]
            centroids = np.empty_like(rows)
            for c in np.unique(b_classes).tolist():
                mask = b_classes == c
                centroids[mask] = index.class_centroid(int(c))
            dist_b = _dist_rows_to_points(rows, centroids)
        else:  # DSA3
            spec = config.neighborhood
            means_a = _anchor_means(index, a_rows, spec, config.include_anchor)
            means_b = _anchor_means(index, anchor_b, spec, config.include_anchor)
            dist_a = _dist_rows_to_points(rows, means_a)
            dist_b = _dist_rows_to_points(rows, means_b)

    values = _ratio_values(dist_a, dist_b, config.zero_denominator_policy, out_rows)
    return values, dist_a, dist_b, a_rows, anchor_b


def score_rows(
    index: NeighborIndex,
    queries: np.ndarray,
    class_ids: np.ndarray,
    config: DsaConfig,
    exclude_rows: np.ndarray | None = None,
) -> list[DsaScore]:
    """Score a matrix of query traces against a built index.

    ``class_ids[i]`` is the class the i-th query is measured against. Work is
    cut into fixed-size blocks grouped by class; blocks may run on a thread
    pool (capped by the ``SADL_DSA_THREADS`` environment variable) and the
    result is identical regardless of worker count. An empty query matrix
    yields an empty list.
    """
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim != 2:
        raise DimensionMismatchError("queries must be a 2-D matrix")
    class_ids = np.asarray(class_ids, dtype=np.int64)
    m = queries.shape[0]
    if class_ids.shape != (m,):
        raise CountMismatchError("class_ids must align with query rows")
    if m == 0:
        return []

    value = np.empty(m)
    dist_a = np.empty(m)
    dist_b = np.empty(m)
    anchor_a = np.empty(m, dtype=np.int64)
    anchor_b = np.empty(m, dtype=np.int64)

    tasks = []
    for c in np.unique(class_ids).tolist():
        idx = np.flatnonzero(class_ids == c)
        for start in range(0, idx.size, QUERY_BLOCK):
            tasks.append((int(c), idx[start : start + QUERY_BLOCK]))

    def run(task):
        c, idx = task
        ex = exclude_rows[idx] if exclude_rows is not None else None
        try:
            v, da, db, aa, ab = _score_block(index, queries[idx], c, config, ex, idx)
        except EmptyClassError as exc:
            raise EmptyClassError(f"query row {int(idx[0])}: {exc}") from exc
        value[idx] = v
        dist_a[idx] = da
        dist_b[idx] = db
        anchor_a[idx] = aa
        anchor_b[idx] = ab

    workers = _worker_count(len(tasks))
    if workers == 1:
        for task in tasks:
            run(task)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, tasks))

    return [
        DsaScore(
            value=float(value[i]),
            dist_a=float(dist_a[i]),
            dist_b=float(dist_b[i]),
            anchor_a=int(anchor_a[i]),
            anchor_b=int(anchor_b[i]),
        )
        for i in range(m)
    ]


def batch_dsa(
    train: LabeledTraceSet, test: LabeledTraceSet, config: DsaConfig
) -> list[DsaScore]:
    """Score every test row against the training set under one config.

    Results are order-aligned with the test rows and deterministic. When
    normalization is on, per-neuron statistics come from the training set
    only and are applied to both sides. ``exclude_self_rows`` removes
    training row ``i`` from test row ``i``'s same-class search, for audits
    that score a training set against itself.
    """
    if train.traces.n_neurons != test.traces.n_neurons:
        raise DimensionMismatchError(
            f"train has {train.traces.n_neurons} neurons, test has {test.traces.n_neurons}"
        )
    if train.n_classes != test.n_classes:
        raise CountMismatchError(
            f"train declares {train.n_classes} classes, test declares {test.n_classes}"
        )
    train_traces = train.traces
    test_traces = test.traces
    if config.normalization:
        stats = compute_trace_stats(train_traces)
        train_traces = normalize_traces(train_traces, stats)
        test_traces = normalize_traces(test_traces, stats)
    index = NeighborIndex(
        train_traces, train.labels_for(config.class_reference), train.n_classes
    )
    exclude = None
    if config.exclude_self_rows:
        exclude = np.arange(test.n_samples, dtype=np.int64)
        exclude[exclude >= train.n_samples] = -1
    return score_rows(
        index,
        test_traces.traces,
        test.labels_for(config.class_reference),
        config,
        exclude_rows=exclude,
    )


def _single(index: NeighborIndex, x, c_x: int, config: DsaConfig, exclude: int | None) -> DsaScore:
    q = np.asarray(x, dtype=np.float64)[None, :]
    ex = None if exclude is None else np.array([exclude], dtype=np.int64)
    return score_rows(index, q, np.array([c_x]), config, exclude_rows=ex)[0]


def dsa0(
    index: NeighborIndex, x, c_x: int, *, policy: str = "infinity", exclude: int | None = None
) -> DsaScore:
    """Original score of one input measured against class ``c_x``."""
    cfg = DsaConfig(variant=DsaVariant.DSA0, zero_denominator_policy=policy)
    return _single(index, x, c_x, cfg, exclude)


def dsa1(
    index: NeighborIndex, x, c_x: int, *, policy: str = "infinity", exclude: int | None = None
) -> DsaScore:
    """First modification: denominator measured from the input itself."""
    cfg = DsaConfig(variant=DsaVariant.DSA1, zero_denominator_policy=policy)
    return _single(index, x, c_x, cfg, exclude)


def dsa2(
    index: NeighborIndex, x, c_x: int, *, policy: str = "infinity", exclude: int | None = None
) -> DsaScore:
    """Second modification: distances measured against class centroids."""
    cfg = DsaConfig(variant=DsaVariant.DSA2, zero_denominator_policy=policy)
    return _single(index, x, c_x, cfg, exclude)


def dsa3(
    index: NeighborIndex,
    x,
    c_x: int,
    spec: NeighborhoodSpec | None = None,
    *,
    include_anchor: bool = True,
    policy: str = "infinity",
    exclude: int | None = None,
) -> DsaScore:
    """Third modification: distances against local neighborhood means."""
    cfg = DsaConfig(
        variant=DsaVariant.DSA3,
        neighborhood=spec if spec is not None else NeighborhoodSpec.k_nearest(DEFAULT_K),
        zero_denominator_policy=policy,
        include_anchor=include_anchor,
    )
    return _single(index, x, c_x, cfg, exclude)
