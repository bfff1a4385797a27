"""Named evaluation runs and their TSV/JSON report emission.

A run classifies every test record against a database index, keeps the
per-record probabilities (for ROC export and fairness stratification),
and rolls up per-class AUC, mAUC, ACC, BACC, and the mean absolute month
error when regression targets are present.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from . import wire
from .corpus import Corpus
from .decision import DEFAULT_CLASSIFY_K, DEFAULT_REGRESS_K, DecisionError, classify_knn, regress_knn
from .index import VectorIndex, search
from .metrics import (
    MetricError,
    RocCurve,
    accuracy,
    balanced_accuracy,
    mauc,
    mean_abs_months,
    roc_curve,
)


@dataclass(frozen=True)
class EvaluationRun:
    """Everything observed while scoring one test split at one k."""

    name: str
    k: int
    classes: tuple[str, ...]
    record_ids: tuple[str, ...]
    attributes: tuple[Mapping[str, str], ...]
    true_labels: tuple[str, ...]
    probabilities: tuple[Mapping[str, float], ...]
    predictions: tuple[str, ...]
    per_class_auc: Mapping[str, float | None]
    mauc: float
    accuracy: float
    balanced_accuracy: float
    curves: Mapping[str, RocCurve]
    l1_months: float | None = None

    def summary_payload(self) -> dict:
        payload = {
            "name": self.name,
            "k": self.k,
            "count": len(self.record_ids),
            "classes": list(self.classes),
            "per_class_auc": {cls: self.per_class_auc[cls] for cls in self.classes},
            "mauc": self.mauc,
            "accuracy": self.accuracy,
            "balanced_accuracy": self.balanced_accuracy,
            "l1_months": self.l1_months,
        }
        if self.l1_months is None:
            payload["notes"] = ["regression targets absent; L1 omitted"]
        return payload


def run_evaluation(
    index: VectorIndex,
    test: Corpus,
    k: int = DEFAULT_CLASSIFY_K,
    k_regress: int = DEFAULT_REGRESS_K,
    name: str = "run",
) -> EvaluationRun:
    """Classify each test record by weighted KNN vote and score the run.

    Votes range over the database's full class list, so classes missing
    from a record's neighborhood keep a probability.  The month-error
    summary appears only when both sides carry regression targets.
    """
    if not test.records:
        raise MetricError("test corpus is empty")
    for rec in test.records:
        if rec.label is None:
            raise MetricError(f"test record {rec.id!r} carries no label")

    classes = index.class_names()
    if not classes:
        raise MetricError("database records carry no labels")

    probabilities: list[Mapping[str, float]] = []
    predictions: list[str] = []
    months_pred: list[int] = []
    regress_ok = all(rec.target_months is not None for rec in test.records)
    for rec in test.records:
        hits = search(index, rec.vector, max(k, k_regress if regress_ok else k))
        scores = classify_knn(hits, k=k, classes=classes)
        probabilities.append(scores.as_mapping())
        predictions.append(scores.argmax())
        if regress_ok:
            try:
                months_pred.append(regress_knn(hits, k=k_regress))
            except DecisionError:
                regress_ok = False

    true_labels = [rec.label for rec in test.records]
    mauc_result = mauc(probabilities, true_labels)

    curves = {}
    for cls, value in mauc_result.per_class.items():
        if value is None:
            continue
        curves[cls] = roc_curve(
            [row.get(cls, 0.0) for row in probabilities],
            [lab == cls for lab in true_labels],
        )

    l1 = None
    if regress_ok:
        l1 = mean_abs_months(months_pred, [rec.target_months for rec in test.records])

    return EvaluationRun(
        name=name,
        k=k,
        classes=tuple(sorted(mauc_result.per_class)),
        record_ids=tuple(rec.id for rec in test.records),
        attributes=tuple(rec.attributes for rec in test.records),
        true_labels=tuple(true_labels),
        probabilities=tuple(probabilities),
        predictions=tuple(predictions),
        per_class_auc=mauc_result.per_class,
        mauc=mauc_result.mauc,
        accuracy=accuracy(predictions, true_labels),
        balanced_accuracy=balanced_accuracy(predictions, true_labels),
        curves=curves,
        l1_months=l1,
    )


def _fmt(value: float | None) -> str:
    return "" if value is None else format(value, ".17g")


def write_report(run: EvaluationRun, out_dir: str | Path, stem: str | None = None) -> list[Path]:
    """Emit the TSV table, JSON document, and per-class ROC point files.

    Returns the written paths.  Column order and float rendering are
    stable across runs, so the outputs are byte-reproducible.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or run.name
    written = []

    tsv_path = out_dir / f"{stem}.tsv"
    lines = ["metric\tclass\tvalue"]
    for cls in run.classes:
        lines.append(f"auc\t{cls}\t{_fmt(run.per_class_auc[cls])}")
    lines.append(f"mauc\t\t{_fmt(run.mauc)}")
    lines.append(f"accuracy\t\t{_fmt(run.accuracy)}")
    lines.append(f"balanced_accuracy\t\t{_fmt(run.balanced_accuracy)}")
    if run.l1_months is not None:
        lines.append(f"l1_months\t\t{_fmt(run.l1_months)}")
    tsv_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    written.append(tsv_path)

    json_path = out_dir / f"{stem}.json"
    payload = run.summary_payload()
    payload["curves"] = {cls: wire.roc_payload(run.curves[cls]) for cls in sorted(run.curves)}
    json_path.write_text(wire.dumps(payload) + "\n", encoding="utf-8")
    written.append(json_path)

    for cls in sorted(run.curves):
        roc_path = out_dir / f"{stem}.roc.{_safe(cls)}.tsv"
        rows = ["threshold\tfpr\ttpr"]
        for point in run.curves[cls].points:
            threshold = "inf" if point.threshold == float("inf") else format(point.threshold, ".17g")
            rows.append(f"{threshold}\t{format(point.fpr, '.17g')}\t{format(point.tpr, '.17g')}")
        roc_path.write_text("".join(row + "\n" for row in rows), encoding="utf-8")
        written.append(roc_path)
    return written


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)
