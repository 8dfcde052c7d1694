"""Set-matching metrics: precision/recall/F1, accuracy variants, detection AUC.

All 0/0 ratios are defined as 0. Two accuracy modes ship: ``jaccard``
(tp / (tp+fp+fn), a proper set-overlap measure, the default) and
``recall-compat`` (reports recall in the accuracy column, for comparability
with evaluations that define accuracy as gold-item coverage). Reports always
state which mode produced a number.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

AccuracyMode = Literal["jaccard", "recall-compat"]
AggregationMode = Literal["micro", "macro"]


@dataclass(frozen=True)
class ConfusionCounts:
    """TP/FP/FN tallies from one-to-one matching, per vacancy or corpus-wide."""

    tp: int
    fp: int
    fn: int

    def __post_init__(self) -> None:
        if self.tp < 0 or self.fp < 0 or self.fn < 0:
            raise ValueError(f"counts must be non-negative: {self}")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class AggregateMetrics:
    precision: float
    recall: float
    f1: float
    accuracy: float
    aggregation: AggregationMode
    accuracy_mode: AccuracyMode
    vacancies: int


@dataclass(frozen=True)
class MetricsRow:
    """One leaderboard row; provenance fields record how it was computed."""

    model: str
    accuracy: float
    f1: float
    precision: float
    recall: float
    auc: float
    aggregation: AggregationMode
    accuracy_mode: AccuracyMode


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def precision_recall_f1(c: ConfusionCounts) -> tuple[float, float, float]:
    """P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R); 0/0 -> 0."""
    p = _ratio(c.tp, c.tp + c.fp)
    r = _ratio(c.tp, c.tp + c.fn)
    f1 = _ratio(2.0 * p * r, p + r)
    return p, r, f1


def accuracy(c: ConfusionCounts, mode: AccuracyMode = "jaccard") -> float:
    if mode == "jaccard":
        return _ratio(c.tp, c.tp + c.fp + c.fn)
    if mode == "recall-compat":
        return _ratio(c.tp, c.tp + c.fn)
    raise ValueError(f"unknown accuracy mode {mode!r}")


def aggregate(
    per_vacancy: Sequence[ConfusionCounts],
    mode: AggregationMode,
    accuracy_mode: AccuracyMode = "jaccard",
) -> AggregateMetrics:
    """Combine per-vacancy counts.

    micro: sum the counts, then compute each metric once.
    macro: compute metrics per vacancy, then take the arithmetic mean.
    """
    if not per_vacancy:
        raise ValueError("cannot aggregate an empty list of confusion counts")
    if mode == "micro":
        total = ConfusionCounts(0, 0, 0)
        for c in per_vacancy:
            total = total + c
        p, r, f1 = precision_recall_f1(total)
        acc = accuracy(total, accuracy_mode)
    elif mode == "macro":
        rows = [precision_recall_f1(c) for c in per_vacancy]
        n = len(per_vacancy)
        p = sum(row[0] for row in rows) / n
        r = sum(row[1] for row in rows) / n
        f1 = sum(row[2] for row in rows) / n
        acc = sum(accuracy(c, accuracy_mode) for c in per_vacancy) / n
    else:
        raise ValueError(f"unknown aggregation mode {mode!r}")
    return AggregateMetrics(
        precision=p,
        recall=r,
        f1=f1,
        accuracy=acc,
        aggregation=mode,
        accuracy_mode=accuracy_mode,
        vacancies=len(per_vacancy),
    )


def detection_auc(scored: Iterable[tuple[float, bool]]) -> float:
    """Probability that a random positive outranks a random negative.

    Rank statistic over (score, label) pairs with ties counted half. This is
    the harness's documented stand-in for a ROC AUC column: positives are
    gold skills scored by their best similarity to the predictions, negatives
    are distractor gold skills from other vacancies scored the same way.
    """
    items = sorted(scored, key=lambda sl: sl[0])
    n_pos = sum(1 for _, label in items if label)
    n_neg = len(items) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("detection_auc needs at least one positive and one negative")
    # midranks over tied scores
    rank_sum_pos = 0.0
    i = 0
    while i < len(items):
        j = i
        while j < len(items) and items[j][0] == items[i][0]:
            j += 1
        midrank = (i + 1 + j) / 2.0  # ranks are 1-based; block spans i+1..j
        rank_sum_pos += midrank * sum(1 for k in range(i, j) if items[k][1])
        i = j
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)
