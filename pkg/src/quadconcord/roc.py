"""ROC curves and AUC for estimator diagnosability.

Scores are concordance estimates; labels mark mean patterns whose trends
truly agree.  The threshold sweep groups tied scores, so the AUC equals the
Mann-Whitney statistic with half credit for ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DataError, DegenerateLabelsError


@dataclass(frozen=True)
class ScoredLabel:
    score: float
    label: bool

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise DataError(f"score must be finite, got {self.score}")


@dataclass(frozen=True, eq=False)
class RocCurve:
    """ROC points from (0,0) to (1,1), monotone in both coordinates."""

    points: np.ndarray  # shape (k, 2): (false positive rate, true positive rate)
    auc: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ConfigError(f"points must have shape (k, 2), got {pts.shape}")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)


def _extract(data):
    scores = []
    labels = []
    for item in data:
        if isinstance(item, ScoredLabel):
            scores.append(item.score)
            labels.append(bool(item.label))
        else:
            s, lab = item
            scores.append(float(s))
            labels.append(bool(lab))
    return np.asarray(scores, dtype=np.float64), np.asarray(labels, dtype=bool)


def roc_curve(data) -> RocCurve:
    """Threshold-sweep ROC over distinct scores (descending), AUC by trapezoid.

    ``data`` is an iterable of :class:`ScoredLabel` or (score, label) pairs.
    Requires at least one positive and one negative label.
    """
    scores, labels = _extract(data)
    if scores.size == 0:
        raise DegenerateLabelsError("no scored labels provided")
    if not np.all(np.isfinite(scores)):
        raise DataError("scores must be finite")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError(
            f"need both classes, got {n_pos} positives and {n_neg} negatives"
        )
    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    l_sorted = labels[order]
    # group ties: cumulative counts at the end of each distinct-score block
    boundary = np.nonzero(np.diff(s_sorted))[0]
    block_ends = np.concatenate([boundary, [s_sorted.size - 1]])
    tp = np.cumsum(l_sorted)[block_ends]
    fp = np.cumsum(~l_sorted)[block_ends]
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(points=np.column_stack([fpr, tpr]), auc=auc)


def auc_pair_count(data) -> float:
    """Brute-force Mann-Whitney AUC (ties get half credit); O(n_pos * n_neg)."""
    scores, labels = _extract(data)
    pos = scores[labels]
    neg = scores[~labels]
    if pos.size == 0 or neg.size == 0:
        raise DegenerateLabelsError("need both classes for AUC")
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / (pos.size * neg.size))
