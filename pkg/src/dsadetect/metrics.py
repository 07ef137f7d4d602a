"""Corner-case detection metrics over scored samples.

A sample is a corner case when the model got it wrong (predicted differs
from true), or when an external oracle flagged it; either way the caller
bakes that decision into :class:`ScoredSample.is_corner`. The metrics treat
scores as opaque ranks, so any strictly increasing transform of the scores
leaves ROC/AUC untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateLabelsError,
    NoCornerCasesError,
    NonFiniteValueError,
    ValidationError,
)


@dataclass(frozen=True)
class ScoredSample:
    """One evaluated sample: its score, corner flag, and source row id."""

    dsa: float
    is_corner: bool
    row: int

    def __post_init__(self):
        if math.isnan(self.dsa):
            raise NonFiniteValueError(f"row {self.row}: score is NaN")
        if self.dsa < 0:
            raise ValidationError(f"row {self.row}: negative score {self.dsa}")


def as_samples(dsa_values, corner_mask, rows=None) -> list[ScoredSample]:
    """Zip score and corner-flag vectors into :class:`ScoredSample` records."""
    dsa_values = np.asarray(dsa_values, dtype=np.float64)
    corner_mask = np.asarray(corner_mask, dtype=bool)
    if rows is None:
        rows = np.arange(dsa_values.shape[0])
    rows = np.asarray(rows, dtype=np.int64)
    if not (dsa_values.shape == corner_mask.shape == rows.shape):
        raise ValidationError("score, corner and row vectors must align")
    return [
        ScoredSample(dsa=float(d), is_corner=bool(c), row=int(r))
        for d, c, r in zip(dsa_values, corner_mask, rows)
    ]


@dataclass(frozen=True)
class CoverageCurve:
    """Coverage as a function of the score threshold.

    ``thresholds`` descend; ``coverage`` is the fraction of corner cases
    whose score is at least the matching threshold, except the leading point
    which records strict coverage at the top score (always the curve's
    starting level). Plotted against a falling threshold the curve rises
    from that level to 1.
    """

    thresholds: np.ndarray
    coverage: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return [
            (float(t), float(c)) for t, c in zip(self.thresholds, self.coverage)
        ]


def _split_scores(samples: list[ScoredSample]) -> tuple[np.ndarray, np.ndarray]:
    scores = np.array([s.dsa for s in samples], dtype=np.float64)
    corner = np.array([s.is_corner for s in samples], dtype=bool)
    return scores, corner


def coverage(samples: list[ScoredSample], v_th: float) -> float:
    """Fraction of corner cases scored strictly above ``v_th``.

    The infinity sentinel counts as above any finite threshold. Raises
    :class:`NoCornerCasesError` when no sample is a corner case.
    """
    scores, corner = _split_scores(samples)
    n_corner = int(corner.sum())
    if n_corner == 0:
        raise NoCornerCasesError("no corner-case samples to cover")
    return float((scores[corner] > v_th).sum()) / n_corner


def coverage_curve(samples: list[ScoredSample]) -> CoverageCurve:
    """Coverage swept over every distinct score, descending.

    The first point pins the curve at strict coverage of the highest score
    (zero unless scores tie at the top); each following point reports the
    coverage reached once the threshold falls just below that score, so the
    final point is always 1.
    """
    scores, corner = _split_scores(samples)
    n_corner = int(corner.sum())
    if n_corner == 0:
        raise NoCornerCasesError("no corner-case samples to cover")
    distinct = np.unique(scores)[::-1]
    corner_scores = scores[corner]
    thresholds = [float(distinct[0])]
    cov = [float((corner_scores > distinct[0]).sum()) / n_corner]
    for v in distinct:
        thresholds.append(float(v))
        cov.append(float((corner_scores >= v).sum()) / n_corner)
    return CoverageCurve(
        thresholds=np.array(thresholds), coverage=np.array(cov)
    )


def accuracy_curve(
    samples: list[ScoredSample], true_labels, predicted_labels, step: int = 100
) -> list[tuple[int, float]]:
    """Model accuracy over prefixes of the most-surprising-first ordering.

    Samples are ordered by descending score with ties broken by ascending
    row id; accuracy is evaluated on the top ``k`` for ``k`` starting at
    ``min(100, n)`` and advancing by ``step`` until ``n``, which is always
    included so the last point equals overall accuracy.
    """
    if not samples:
        raise ValidationError("accuracy curve needs at least one sample")
    if step < 1:
        raise ValidationError("step must be at least 1")
    true_labels = np.asarray(true_labels, dtype=np.int64)
    predicted_labels = np.asarray(predicted_labels, dtype=np.int64)
    scores = np.array([s.dsa for s in samples], dtype=np.float64)
    rows = np.array([s.row for s in samples], dtype=np.int64)
    order = np.lexsort((rows, -scores))
    correct = (true_labels[rows[order]] == predicted_labels[rows[order]]).astype(np.float64)
    cum = np.cumsum(correct)
    n = len(samples)
    ks = list(range(min(100, n), n + 1, step))
    if ks[-1] != n:
        ks.append(n)
    return [(k, float(cum[k - 1] / k)) for k in ks]


@dataclass(frozen=True)
class RocCurve:
    """Corner-vs-normal ROC built from one threshold step per distinct score.

    ``fpr``/``tpr`` run from (0, 0) to (1, 1); ``thresholds`` aligns with the
    points (leading +inf for the origin). ``auc`` is the trapezoidal area,
    which under this tie grouping equals the rank statistic
    P(corner > normal) + half P(equal).
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return [(float(f), float(t)) for f, t in zip(self.fpr, self.tpr)]


def roc_auc(samples: list[ScoredSample]) -> RocCurve:
    """ROC curve and AUC for separating corner cases from normal samples.

    Thresholds sweep the distinct scores from high to low; equal scores move
    as one group so the area matches the Mann-Whitney statistic exactly.
    Raises :class:`DegenerateLabelsError` when either side is empty.
    """
    scores, corner = _split_scores(samples)
    p = int(corner.sum())
    n = int((~corner).sum())
    if p == 0 or n == 0:
        raise DegenerateLabelsError(
            f"need both corner and normal samples, got {p} corner / {n} normal"
        )
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    c = corner[order]
    fpr = [0.0]
    tpr = [0.0]
    thresholds = [np.inf]
    tp = 0
    fp = 0
    i = 0
    while i < s.shape[0]:
        j = i
        while j < s.shape[0] and s[j] == s[i]:
            j += 1
        tp += int(c[i:j].sum())
        fp += int((~c[i:j]).sum())
        fpr.append(fp / n)
        tpr.append(tp / p)
        thresholds.append(float(s[i]))
        i = j
    auc = math.fsum(
        (fpr[i] - fpr[i - 1]) * (tpr[i] + tpr[i - 1]) / 2.0
        for i in range(1, len(fpr))
    )
    return RocCurve(
        fpr=np.array(fpr),
        tpr=np.array(tpr),
        thresholds=np.array(thresholds),
        auc=float(auc),
    )
