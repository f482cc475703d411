"""Thresholded classification metrics and the rank-statistic AUC."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass
from typing import Optional, Sequence


class SingleClassAUC(UserWarning):
    """AUC is undefined when only one class is present."""


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: Optional[float]
    tp: int
    tn: int
    fp: int
    fn: int

    def to_dict(self) -> dict:
        return asdict(self)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def rank_auc(labels: Sequence[int], scores: Sequence[float]) -> Optional[float]:
    """Mann-Whitney U over (n_pos * n_neg), ties sharing the average rank.

    Ranks are doubled so the statistic stays an exact integer until the one
    final division.
    """
    n_pos = sum(1 for y in labels if y == 1)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    twice_rank_sum = 0
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        # ranks i+1 .. j+1 share the average (i + j + 2) / 2; doubled: i + j + 2
        tied_pos = sum(1 for k in range(i, j + 1) if labels[order[k]] == 1)
        twice_rank_sum += tied_pos * (i + j + 2)
        i = j + 1
    twice_u = twice_rank_sum - n_pos * (n_pos + 1)
    return twice_u / (2 * n_pos * n_neg)


def score(labels: Sequence[int], scores: Sequence[float], threshold: float = 0.5) -> MetricReport:
    """Accuracy, precision, recall, F1 at ``threshold`` (score >= threshold is positive) and AUC."""
    labels = list(labels)
    scores = [float(s) for s in scores]
    if len(labels) != len(scores):
        raise ValueError(f"{len(labels)} labels but {len(scores)} scores")
    if not labels:
        raise ValueError("no labels")
    if any(y not in (0, 1) for y in labels):
        raise ValueError("labels must be 0 or 1")
    if any(s != s for s in scores):
        raise ValueError("scores must not be NaN")

    tp = tn = fp = fn = 0
    for y, s in zip(labels, scores):
        pred = 1 if s >= threshold else 0
        if pred and y:
            tp += 1
        elif pred:
            fp += 1
        elif y:
            fn += 1
        else:
            tn += 1
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    auc = rank_auc(labels, scores)
    if auc is None:
        warnings.warn(SingleClassAUC("labels contain a single class; AUC not defined"), stacklevel=2)
    return MetricReport(
        accuracy=_ratio(tp + tn, len(labels)),
        precision=precision,
        recall=recall,
        f1=f1,
        auc=auc,
        tp=tp,
        tn=tn,
        fp=fp,
        fn=fn,
    )
