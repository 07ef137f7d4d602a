"""Naive reference implementation of every surprise-adequacy variant.

This module is the testing oracle for :mod:`dsadetect.dsa`: a direct,
unoptimized transcription of the score definitions using per-row scans and
plain argmins. It deliberately shares no code with the indexed fast path.
Keep it slow and obvious; its only job is to be correct.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    EmptyClassError,
    EmptyComplementError,
    EmptyNeighborhoodError,
)

INFINITY = float("inf")


def _norm(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)))


def _argmin_rows(rows: np.ndarray, ids: list[int], point) -> tuple[int, float]:
    """Lowest-index row of ``rows`` minimizing Euclidean distance to point."""
    best_id = -1
    best = INFINITY
    for rid, row in zip(ids, rows):
        d = _norm(row, point)
        if d < best or (d == best and rid < best_id):
            best = d
            best_id = rid
    return best_id, best


def _class_ids(classes: np.ndarray, c: int, same: bool, skip: int | None = None) -> list[int]:
    out = []
    for i, ci in enumerate(classes):
        if (ci == c) == same and i != skip:
            out.append(i)
    return out


def _ratio(dist_a: float, dist_b: float) -> float:
    if dist_a == 0.0:
        return 0.0
    if dist_b == 0.0:
        return INFINITY
    return dist_a / dist_b


def naive_dsa(
    train_rows: np.ndarray,
    train_classes: np.ndarray,
    x,
    c_x: int,
    variant: str,
    k: int | None = None,
    delta: float | None = None,
    include_anchor: bool = True,
    exclude_row: int | None = None,
) -> tuple[float, float, float, int, int]:
    """Score one input against a training set by direct scans.

    Returns ``(value, dist_a, dist_b, anchor_a, anchor_b)`` where the anchors
    are the nearest same-class and nearest other-class training rows of the
    input. ``variant`` is one of ``dsa0``, ``dsa1``, ``dsa2``, ``dsa3``;
    ``dsa3`` takes either ``k`` or ``delta``. ``exclude_row`` removes one
    training row from the same-class anchor search.
    """
    train_rows = np.asarray(train_rows, dtype=np.float64)
    train_classes = np.asarray(train_classes, dtype=np.int64)
    x = np.asarray(x, dtype=np.float64)

    same_ids = _class_ids(train_classes, c_x, same=True, skip=exclude_row)
    other_ids = _class_ids(train_classes, c_x, same=False)
    if not same_ids:
        raise EmptyClassError(f"no training rows in class {c_x}")
    if not other_ids:
        raise EmptyComplementError(f"no training rows outside class {c_x}")

    anchor_a, nn_same_dist = _argmin_rows(train_rows[same_ids], same_ids, x)
    anchor_b, nn_other_dist = _argmin_rows(train_rows[other_ids], other_ids, x)

    if variant == "dsa0":
        dist_a = nn_same_dist
        ref_b, dist_b = _argmin_rows(train_rows[other_ids], other_ids, train_rows[anchor_a])
        return _ratio(dist_a, dist_b), dist_a, dist_b, anchor_a, ref_b

    if variant == "dsa1":
        return _ratio(nn_same_dist, nn_other_dist), nn_same_dist, nn_other_dist, anchor_a, anchor_b

    if variant == "dsa2":
        own_ids = _class_ids(train_classes, c_x, same=True)
        m_a = train_rows[own_ids].sum(axis=0) / len(own_ids)
        b_class = int(train_classes[anchor_b])
        b_ids = _class_ids(train_classes, b_class, same=True)
        m_b = train_rows[b_ids].sum(axis=0) / len(b_ids)
        dist_a = _norm(x, m_a)
        dist_b = _norm(x, m_b)
        return _ratio(dist_a, dist_b), dist_a, dist_b, anchor_a, anchor_b

    if variant == "dsa3":
        m_a = _neighborhood_mean(train_rows, train_classes, anchor_a, k, delta, include_anchor)
        m_b = _neighborhood_mean(train_rows, train_classes, anchor_b, k, delta, include_anchor)
        dist_a = _norm(x, m_a)
        dist_b = _norm(x, m_b)
        return _ratio(dist_a, dist_b), dist_a, dist_b, anchor_a, anchor_b

    raise ValueError(f"unknown variant {variant!r}")


def _neighborhood_mean(
    train_rows: np.ndarray,
    train_classes: np.ndarray,
    anchor: int,
    k: int | None,
    delta: float | None,
    include_anchor: bool,
) -> np.ndarray:
    """Mean of the neighborhood around a training row within its own class."""
    c = int(train_classes[anchor])
    skip = None if include_anchor else anchor
    ids = _class_ids(train_classes, c, same=True, skip=skip)
    scored = sorted(
        ((_norm(train_rows[i], train_rows[anchor]), i) for i in ids),
        key=lambda t: (t[0], t[1]),
    )
    if k is not None:
        chosen = [i for _, i in scored[: min(k, len(scored))]]
    else:
        chosen = [i for d, i in scored if d < delta]
    if not chosen:
        raise EmptyNeighborhoodError(
            f"no class-{c} rows within {delta} of row {anchor}"
        )
    return train_rows[chosen].sum(axis=0) / len(chosen)
