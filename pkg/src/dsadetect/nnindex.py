"""Exact nearest-neighbor queries over trace rows, restricted by class.

The index is built once over a training trace set and is immutable after
that; queries are pure reads and safe to issue concurrently. All queries are
exact: a fast matrix-product pass prunes candidates, and every surviving
candidate's squared distance is then recomputed elementwise, so the reported
hit is identical to a direct scan. Ties are broken toward the lowest row
index, which makes every result deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EmptyClassError, EmptyComplementError
from .traces import ClassPartition, TraceSet

# Fixed computation block sizes. Work is always cut along these boundaries so
# results cannot depend on how many workers process the blocks.
QUERY_BLOCK = 256
COLUMN_BLOCK = 16384

# Relative slack covering matrix-product rounding when pruning candidates.
# Survivors are re-verified exactly, so the slack only needs to be generous.
_PRUNE_SLACK = 1e-7


@dataclass(frozen=True)
class NeighborHit:
    """One query result: a training row id and its Euclidean distance."""

    index: int
    distance: float


def _as_query_block(queries, n_neurons: int) -> np.ndarray:
    q = np.asarray(queries, dtype=np.float64)
    if q.ndim == 1:
        q = q[None, :]
    if q.ndim != 2 or q.shape[1] != n_neurons:
        raise DimensionMismatchError(
            f"queries must have {n_neurons} columns, got shape {q.shape}"
        )
    if not np.all(np.isfinite(q)):
        raise DimensionMismatchError("queries contain non-finite values")
    return q


def _exact_d2(rows: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elementwise-exact squared distances between each row and one query."""
    diff = rows - q
    return np.einsum("ij,ij->i", diff, diff)


class NeighborIndex:
    """Class-partitioned exact Euclidean search over a training trace set.

    Parameters
    ----------
    traces : TraceSet
        Training traces; row ids in query results refer to this matrix.
    class_ids : array-like of int
        Class id per training row (whichever label vector the caller treats
        as the class reference).
    n_classes : int
        Total number of classes; every id must fall in ``[0, n_classes)``.
    """

    def __init__(self, traces: TraceSet, class_ids, n_classes: int):
        self.traces = traces
        self.partition = ClassPartition.from_labels(
            np.asarray(class_ids, dtype=np.int64), n_classes
        )
        if self.partition.n_samples != traces.n_samples:
            raise DimensionMismatchError(
                "class id vector length does not match the trace matrix"
            )
        self.row_classes = np.array(class_ids, dtype=np.int64)
        self.row_classes.setflags(write=False)
        self._class_rows: list[np.ndarray] = []
        self._class_sqnorms: list[np.ndarray] = []
        centroids = np.full((n_classes, traces.n_neurons), np.nan)
        for c in range(n_classes):
            rows = np.ascontiguousarray(traces.traces[self.partition.members[c]])
            rows.setflags(write=False)
            self._class_rows.append(rows)
            sq = np.einsum("ij,ij->i", rows, rows)
            sq.setflags(write=False)
            self._class_sqnorms.append(sq)
            if rows.shape[0]:
                centroids[c] = rows.mean(axis=0)
        centroids.setflags(write=False)
        self._centroids = centroids

    # --- introspection ----------------------------------------------------

    @property
    def n_classes(self) -> int:
        return self.partition.n_classes

    @property
    def n_neurons(self) -> int:
        return self.traces.n_neurons

    def class_members(self, class_id: int) -> np.ndarray:
        """Ascending training row ids belonging to ``class_id``."""
        return self.partition.members[class_id]

    def class_rows(self, class_id: int) -> np.ndarray:
        """The gathered trace rows of ``class_id`` (read-only view)."""
        return self._class_rows[class_id]

    def class_centroid(self, class_id: int) -> np.ndarray:
        """Mean trace of a class; raises for empty classes."""
        if self.partition.size(class_id) == 0:
            raise EmptyClassError(f"class {class_id} has no training rows")
        return self._centroids[class_id]

    # --- batched kernels ----------------------------------------------------

    def _scan_class_min(self, q_block: np.ndarray, class_id: int, exclude_pos=None):
        """Exact per-query argmin over one class for a block of queries.

        Returns ``(rows, d2)`` arrays; empty classes yield ``rows == -1`` and
        ``d2 == inf``. ``exclude_pos[i]`` (within-class position, -1 for none)
        removes one row from query ``i``'s scan.
        """
        rows_c = self._class_rows[class_id]
        members = self.partition.members[class_id]
        m = q_block.shape[0]
        best_row = np.full(m, -1, dtype=np.int64)
        best_d2 = np.full(m, np.inf)
        nc = rows_c.shape[0]
        if nc == 0:
            return best_row, best_d2
        qq = np.einsum("ij,ij->i", q_block, q_block)
        xx = self._class_sqnorms[class_id]
        slack = _PRUNE_SLACK * (float(qq.max(initial=0.0)) + float(xx.max(initial=0.0)))

        # Pass 1: pruned minima per query from the matrix-product distances.
        approx_min = np.full(m, np.inf)
        for start in range(0, nc, COLUMN_BLOCK):
            stop = min(start + COLUMN_BLOCK, nc)
            d2g = self._d2_chunk(q_block, qq, rows_c[start:stop], xx[start:stop])
            if exclude_pos is not None:
                self._mask_excluded(d2g, exclude_pos, start, stop)
            np.minimum(approx_min, d2g.min(axis=1), out=approx_min)

        # Pass 2: gather every candidate within slack and re-verify exactly.
        threshold = approx_min + slack
        for start in range(0, nc, COLUMN_BLOCK):
            stop = min(start + COLUMN_BLOCK, nc)
            d2g = self._d2_chunk(q_block, qq, rows_c[start:stop], xx[start:stop])
            if exclude_pos is not None:
                self._mask_excluded(d2g, exclude_pos, start, stop)
            qi, cj = np.nonzero(d2g <= threshold[:, None])
            if qi.size == 0:
                continue
            pos = cj + start
            diff = rows_c[pos] - q_block[qi]
            d2x = np.einsum("ij,ij->i", diff, diff)
            rid = members[pos]
            for i, r, d2 in zip(qi.tolist(), rid.tolist(), d2x.tolist()):
                if d2 < best_d2[i] or (d2 == best_d2[i] and r < best_row[i]):
                    best_d2[i] = d2
                    best_row[i] = r
        return best_row, best_d2

    @staticmethod
    def _d2_chunk(q_block, qq, rows_chunk, xx_chunk) -> np.ndarray:
        g = q_block @ rows_chunk.T
        d2 = qq[:, None] - 2.0 * g + xx_chunk[None, :]
        return np.maximum(d2, 0.0, out=d2)

    @staticmethod
    def _mask_excluded(d2g, exclude_pos, start, stop) -> None:
        hit = (exclude_pos >= start) & (exclude_pos < stop)
        if hit.any():
            d2g[np.flatnonzero(hit), exclude_pos[hit] - start] = np.inf

    def batch_nearest_in_class(self, queries, class_id: int, exclude_rows=None):
        """Nearest same-class rows for a batch of queries.

        ``exclude_rows[i]`` (global row id, -1 for none) removes one row from
        query ``i``'s scan. Returns ``(rows, distances)``; a query with no
        eligible member raises :class:`EmptyClassError`.
        """
        q = _as_query_block(queries, self.n_neurons)
        exclude_pos = None
        if exclude_rows is not None:
            exclude_pos = self._to_class_positions(exclude_rows, class_id, q.shape[0])
        rows = np.empty(q.shape[0], dtype=np.int64)
        dist = np.empty(q.shape[0])
        for start in range(0, q.shape[0], QUERY_BLOCK):
            stop = min(start + QUERY_BLOCK, q.shape[0])
            ex = exclude_pos[start:stop] if exclude_pos is not None else None
            r, d2 = self._scan_class_min(q[start:stop], class_id, ex)
            if np.any(r < 0):
                raise EmptyClassError(
                    f"class {class_id} has no eligible member for some query"
                )
            rows[start:stop] = r
            dist[start:stop] = np.sqrt(d2)
        return rows, dist

    def batch_nearest_outside_class(self, queries, class_id: int):
        """Nearest rows whose class differs from ``class_id``, per query."""
        q = _as_query_block(queries, self.n_neurons)
        if sum(self.partition.size(c) for c in range(self.n_classes) if c != class_id) == 0:
            raise EmptyComplementError(
                f"no training rows outside class {class_id}"
            )
        rows = np.full(q.shape[0], -1, dtype=np.int64)
        d2 = np.full(q.shape[0], np.inf)
        for start in range(0, q.shape[0], QUERY_BLOCK):
            stop = min(start + QUERY_BLOCK, q.shape[0])
            block = q[start:stop]
            best_row = np.full(block.shape[0], -1, dtype=np.int64)
            best_d2 = np.full(block.shape[0], np.inf)
            for other in range(self.n_classes):
                if other == class_id:
                    continue
                r, d = self._scan_class_min(block, other)
                better = (d < best_d2) | ((d == best_d2) & (r >= 0) & (r < best_row))
                best_d2 = np.where(better, d, best_d2)
                best_row = np.where(better, r, best_row)
            rows[start:stop] = best_row
            d2[start:stop] = best_d2
        return rows, np.sqrt(d2)

    def _to_class_positions(self, exclude_rows, class_id: int, m: int) -> np.ndarray:
        members = self.partition.members[class_id]
        ex = np.asarray(exclude_rows, dtype=np.int64)
        if ex.shape != (m,):
            raise DimensionMismatchError("exclude_rows must align with the query batch")
        pos = np.full(m, -1, dtype=np.int64)
        want = ex >= 0
        if want.any() and members.size:
            loc = np.searchsorted(members, ex[want])
            loc = np.minimum(loc, members.size - 1)
            found = members[loc] == ex[want]
            tmp = np.full(want.sum(), -1, dtype=np.int64)
            tmp[found] = loc[found]
            pos[want] = tmp
        return pos

    # --- single-query operations -------------------------------------------

    def nearest_in_class(self, query, class_id: int, exclude: int | None = None) -> NeighborHit:
        """Exact nearest member of ``class_id``, optionally skipping one row.

        Ties break toward the lowest row index. Raises
        :class:`EmptyClassError` when no eligible member exists.
        """
        ex = None if exclude is None else np.array([exclude], dtype=np.int64)
        rows, dist = self.batch_nearest_in_class(query, class_id, ex)
        return NeighborHit(int(rows[0]), float(dist[0]))

    def nearest_outside_class(self, query, class_id: int) -> NeighborHit:
        """Exact nearest training row belonging to any other class."""
        rows, dist = self.batch_nearest_outside_class(query, class_id)
        return NeighborHit(int(rows[0]), float(dist[0]))

    def k_nearest_in_class(
        self, anchor, class_id: int, k: int, exclude: int | None = None
    ) -> list[NeighborHit]:
        """The ``min(k, class size)`` nearest members of a class to ``anchor``.

        Results ascend by distance with ties by row index. When the anchor is
        itself a class member it appears first at distance zero; pass
        ``exclude`` to drop it for anchor-free neighborhoods.
        """
        if k < 1:
            raise ValueError("k must be at least 1")
        pos, d2 = self._eligible_d2(anchor, class_id, exclude)
        if pos.size == 0:
            raise EmptyClassError(f"class {class_id} has no eligible member")
        kk = min(k, pos.size)
        kth = np.partition(d2, kk - 1)[kk - 1]
        cand = np.flatnonzero(d2 <= kth)
        order = np.argsort(d2[cand], kind="stable")[:kk]
        members = self.partition.members[class_id]
        return [
            NeighborHit(int(members[pos[cand[o]]]), float(np.sqrt(d2[cand[o]])))
            for o in order
        ]

    def radius_in_class(
        self, anchor, class_id: int, delta: float, exclude: int | None = None
    ) -> list[NeighborHit]:
        """All class members strictly closer than ``delta``, ascending.

        An empty result is legal; callers decide whether that is an error.
        """
        if not delta > 0:
            raise ValueError("delta must be positive")
        pos, d2 = self._eligible_d2(anchor, class_id, exclude)
        dist = np.sqrt(d2)
        inside = np.flatnonzero(dist < delta)
        order = np.argsort(dist[inside], kind="stable")
        members = self.partition.members[class_id]
        return [
            NeighborHit(int(members[pos[inside[o]]]), float(dist[inside[o]]))
            for o in order
        ]

    def _eligible_d2(self, anchor, class_id: int, exclude: int | None):
        """Exact squared distances from ``anchor`` to every eligible class row."""
        q = _as_query_block(anchor, self.n_neurons)[0]
        rows_c = self._class_rows[class_id]
        pos = np.arange(rows_c.shape[0])
        if exclude is not None:
            members = self.partition.members[class_id]
            loc = np.searchsorted(members, exclude)
            if loc < members.size and members[loc] == exclude:
                pos = pos[pos != loc]
        if pos.size == 0:
            return pos, np.empty(0)
        return pos, _exact_d2(rows_c[pos], q)


def build_index(labeled, class_reference: str = "predicted") -> NeighborIndex:
    """Build a :class:`NeighborIndex` from a labeled training set.

    ``class_reference`` selects which label vector partitions the rows:
    the model's predictions (default) or the ground-truth labels.
    """
    labels = labeled.labels_for(class_reference)
    return NeighborIndex(labeled.traces, labels, labeled.n_classes)
