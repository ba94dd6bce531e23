"""Classification metrics: accuracy, F1, and rank-based AUC with midrank ties.

AUC uses the rank-sum identity: with midranks R assigned to the positive
scores, AUC = (sum(R_pos) - P(P+1)/2) / (P*N). It equals the probability
that a random positive outscores a random negative, counting ties as 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .records import AI, HUMAN


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    f1_ai: float
    f1_macro: float
    auc: float | None
    n: int


def midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their block."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc_score(labels: np.ndarray, scores: np.ndarray) -> float | None:
    """Rank-statistic AUC of scores against binary labels (1 = positive).

    Returns None when only one class is present.
    """
    pos = labels == 1
    n_pos = int(np.sum(pos))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = midranks(np.asarray(scores, dtype=np.float64))
    rank_sum = float(np.sum(ranks[pos]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def compute_metrics(predictions: Sequence, labels: Sequence[str]) -> Metrics:
    """Score predictions against human/ai labels.

    ``predictions`` carry ``label`` and ``prob_ai`` attributes (see the
    classifier module). F1 is reported for the AI class and macro-averaged;
    AUC comes from the prob_ai ranking and is absent for single-class labels.
    """
    if len(predictions) != len(labels):
        raise MetricsError(
            f"got {len(predictions)} predictions for {len(labels)} labels"
        )
    if not labels:
        raise MetricsError("cannot compute metrics on an empty set")
    for lab in labels:
        if lab not in (HUMAN, AI):
            raise MetricsError(f"unknown label {lab!r}")

    y = np.array([1 if lab == AI else 0 for lab in labels], dtype=np.int64)
    yhat = np.array([1 if p.label == AI else 0 for p in predictions], dtype=np.int64)
    scores = np.array([p.prob_ai for p in predictions], dtype=np.float64)

    correct = int(np.sum(y == yhat))
    tp = int(np.sum((y == 1) & (yhat == 1)))
    fp = int(np.sum((y == 0) & (yhat == 1)))
    fn = int(np.sum((y == 1) & (yhat == 0)))
    tn = int(np.sum((y == 0) & (yhat == 0)))

    f1_ai = _f1(tp, fp, fn)
    f1_human = _f1(tn, fn, fp)
    return Metrics(
        accuracy=correct / y.size,
        f1_ai=f1_ai,
        f1_macro=0.5 * (f1_ai + f1_human),
        auc=auc_score(y, scores),
        n=int(y.size),
    )
