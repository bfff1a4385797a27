"""Classification and regression evaluation metrics.

Covers ROC curves with trapezoidal area, the pairwise (Mann-Whitney)
AUC with the 0.5 tie convention, macro-averaged one-vs-rest AUC,
accuracy, balanced accuracy, mean absolute month error, and demographic
fairness stratification by gender or age bucket.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence


class MetricError(ValueError):
    """Degenerate or inconsistent metric input."""


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    fpr: float
    tpr: float


@dataclass(frozen=True)
class RocCurve:
    """Monotone (fpr, tpr) staircase with strictly decreasing thresholds."""

    points: tuple[RocPoint, ...]
    auc: float


def roc_curve(scores: Sequence[float], labels: Sequence[bool]) -> RocCurve:
    """Build the ROC staircase over distinct score thresholds.

    The curve starts at the sentinel (inf, 0, 0) and ends at (1, 1).
    Records with equal scores enter jointly, producing one diagonal step.
    The stored area is the trapezoidal integral of the polyline.
    """
    _check_binary_input(scores, labels)
    n_pos = sum(1 for lab in labels if lab)
    n_neg = len(labels) - n_pos

    by_score: dict[float, list[int]] = {}
    for score, lab in zip(scores, labels):
        pos_neg = by_score.setdefault(float(score), [0, 0])
        pos_neg[0 if lab else 1] += 1

    points = [RocPoint(math.inf, 0.0, 0.0)]
    tp = fp = 0
    area = 0.0
    prev_fpr = prev_tpr = 0.0
    for threshold in sorted(by_score, reverse=True):
        d_pos, d_neg = by_score[threshold]
        tp += d_pos
        fp += d_neg
        fpr = fp / n_neg
        tpr = tp / n_pos
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0
        points.append(RocPoint(threshold, fpr, tpr))
        prev_fpr, prev_tpr = fpr, tpr
    return RocCurve(points=tuple(points), auc=area)


def auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Pairwise ranking statistic: P(pos > neg) + 0.5 P(pos = neg).

    Computed via midranks, which reproduces the all-pairs count exactly
    (integers and halves stay exact in float64) in O(n log n).
    """
    _check_binary_input(scores, labels)
    n = len(scores)
    order = sorted(range(n), key=lambda i: scores[i])

    rank_sum_pos = 0.0
    n_pos = 0
    i = 0
    while i < n:
        j = i
        while j < n and scores[order[j]] == scores[order[i]]:
            j += 1
        midrank = (i + 1 + j) / 2.0  # ranks are 1-based; ties share the midrank
        for pos in order[i:j]:
            if labels[pos]:
                rank_sum_pos += midrank
                n_pos += 1
        i = j
    n_neg = n - n_pos
    u_statistic = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u_statistic / (n_pos * n_neg)


def _check_binary_input(scores: Sequence[float], labels: Sequence[bool]) -> None:
    if len(scores) != len(labels):
        raise MetricError(f"{len(scores)} scores vs {len(labels)} labels")
    if len(scores) < 2:
        raise MetricError("need at least two records")
    if any(not math.isfinite(s) for s in scores):
        raise MetricError("scores must be finite")
    n_pos = sum(1 for lab in labels if lab)
    if n_pos == 0 or n_pos == len(labels):
        raise MetricError("labels are all one class; ranking quality is undefined")


@dataclass(frozen=True)
class MaucResult:
    mauc: float
    per_class: Mapping[str, float | None]  # None marks an unscorable class


def mauc(
    probabilities: Sequence[Mapping[str, float]],
    true_labels: Sequence[str],
) -> MaucResult:
    """Unweighted mean of one-vs-rest AUCs over scorable classes.

    A class is scorable when the evaluated set holds at least one positive
    and one negative for it; others are reported as None and excluded
    from the mean.  Missing probability entries score 0.
    """
    if len(probabilities) != len(true_labels):
        raise MetricError("probabilities and labels must align")
    if not probabilities:
        raise MetricError("empty evaluation set")

    classes: set[str] = set(true_labels)
    for row in probabilities:
        classes.update(row)

    per_class: dict[str, float | None] = {}
    scorable: list[float] = []
    for cls in sorted(classes):
        binary = [lab == cls for lab in true_labels]
        if not any(binary) or all(binary):
            per_class[cls] = None
            continue
        class_scores = [row.get(cls, 0.0) for row in probabilities]
        value = auc(class_scores, binary)
        per_class[cls] = value
        scorable.append(value)
    if not scorable:
        raise MetricError("no scorable class: every class lacks positives or negatives")
    return MaucResult(mauc=sum(scorable) / len(scorable), per_class=per_class)


def accuracy(predictions: Sequence[str], true_labels: Sequence[str]) -> float:
    """Fraction of exact prediction matches."""
    _check_paired(predictions, true_labels)
    hits = sum(1 for p, t in zip(predictions, true_labels) if p == t)
    return hits / len(predictions)


def balanced_accuracy(predictions: Sequence[str], true_labels: Sequence[str]) -> float:
    """Unweighted mean of per-class recall over represented classes."""
    _check_paired(predictions, true_labels)
    support: dict[str, int] = {}
    correct: dict[str, int] = {}
    for pred, truth in zip(predictions, true_labels):
        support[truth] = support.get(truth, 0) + 1
        if pred == truth:
            correct[truth] = correct.get(truth, 0) + 1
    recalls = [correct.get(cls, 0) / count for cls, count in support.items()]
    return sum(recalls) / len(recalls)


def mean_abs_months(predicted_months: Sequence[float], true_months: Sequence[float]) -> float:
    """Mean absolute error between predicted and true month values."""
    _check_paired(predicted_months, true_months)
    return sum(abs(p - t) for p, t in zip(predicted_months, true_months)) / len(predicted_months)


def _check_paired(a: Sequence, b: Sequence) -> None:
    if len(a) != len(b):
        raise MetricError(f"length mismatch: {len(a)} vs {len(b)}")
    if not a:
        raise MetricError("empty input")


AGE_BUCKETS = (
    ("[0,20]", 0.0, 20.0),
    ("(20,40]", 20.0, 40.0),
    ("(40,60]", 40.0, 60.0),
    ("(60,80]", 60.0, 80.0),
    ("(80,100]", 80.0, 100.0),
)

GENDER_GROUPS = ("F", "M")


@dataclass(frozen=True)
class FairnessRow:
    group: str
    per_class: Mapping[str, float | None]
    mauc: float | None
    support: int


@dataclass(frozen=True)
class FairnessReport:
    grouping: str
    classes: tuple[str, ...]
    rows: tuple[FairnessRow, ...]
    excluded_count: int


def _age_bucket(raw: str | None) -> str | None:
    """Bucket label for a decimal-year age string, or None when excluded.

    Buckets are left-open/right-closed except the first, which includes 0;
    ages above 100 and unparseable values fall out of the analysis.
    """
    if raw is None:
        return None
    try:
        age = float(raw)
    except ValueError:
        warnings.warn(f"unparseable age {raw!r}; record excluded from fairness analysis")
        return None
    if not math.isfinite(age) or age < 0.0 or age > 100.0:
        return None
    for name, lo, hi in AGE_BUCKETS:
        if age <= hi and (age > lo or lo == 0.0):
            return name
    return None


def fairness_report(
    attributes: Sequence[Mapping[str, str]],
    probabilities: Sequence[Mapping[str, float]],
    true_labels: Sequence[str],
    grouping: str,
) -> FairnessReport:
    """Stratify one-vs-rest AUC performance by gender or age bucket.

    Every group row reports per-class AUC and its macro mean over the
    group members alone; classes unscorable within a group stay None.
    Records with unusable demographics are counted as excluded, so group
    supports plus exclusions always equal the input size.
    """
    if not len(attributes) == len(probabilities) == len(true_labels):
        raise MetricError("attributes, probabilities, and labels must align")
    if grouping == "gender":
        group_names: tuple[str, ...] = GENDER_GROUPS

        def assign(attrs: Mapping[str, str]) -> str | None:
            gender = attrs.get("gender")
            return gender if gender in GENDER_GROUPS else None

    elif grouping == "age_bucket":
        group_names = tuple(name for name, _, _ in AGE_BUCKETS)

        def assign(attrs: Mapping[str, str]) -> str | None:
            return _age_bucket(attrs.get("age_years"))

    else:
        raise MetricError(f"unknown grouping {grouping!r}; expected 'gender' or 'age_bucket'")

    classes: set[str] = set(true_labels)
    for row in probabilities:
        classes.update(row)
    class_list = tuple(sorted(classes))

    members: dict[str, list[int]] = {name: [] for name in group_names}
    excluded = 0
    for pos, attrs in enumerate(attributes):
        group = assign(attrs)
        if group is None:
            excluded += 1
        else:
            members[group].append(pos)

    rows = []
    for name in group_names:
        idx = members[name]
        per_class: dict[str, float | None] = {cls: None for cls in class_list}
        group_mauc: float | None = None
        if idx:
            group_probs = [probabilities[i] for i in idx]
            group_labels = [true_labels[i] for i in idx]
            scorable = []
            for cls in class_list:
                binary = [lab == cls for lab in group_labels]
                if not any(binary) or all(binary):
                    continue
                value = auc([row.get(cls, 0.0) for row in group_probs], binary)
                per_class[cls] = value
                scorable.append(value)
            if scorable:
                group_mauc = sum(scorable) / len(scorable)
        rows.append(FairnessRow(group=name, per_class=per_class, mauc=group_mauc, support=len(idx)))

    return FairnessReport(
        grouping=grouping, classes=class_list, rows=tuple(rows), excluded_count=excluded
    )
