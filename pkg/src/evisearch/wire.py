"""Canonical JSON rendering shared by the HTTP service, CLI, and tests.

Every real number is rendered with 17 significant digits so values
round-trip bit-exactly; non-finite floats become the quoted strings
"inf", "-inf", and "nan" (plain JSON has no tokens for them).  The
service's parity guarantee rests on this module being the single
serialization path.
"""

from __future__ import annotations

import json
import math
from typing import Any, Mapping, Sequence

import numpy as np

from .decision import ClassScores, KTuneResult
from .index import NeighborHit
from .metrics import FairnessReport, MaucResult, RocCurve


def format_real(value: float) -> str:
    if math.isinf(value):
        return '"inf"' if value > 0 else '"-inf"'
    if math.isnan(value):
        return '"nan"'
    return format(value, ".17g")


def dumps(obj: Any) -> str:
    """Serialize to canonical JSON text (compact, stable key order)."""
    return _render(obj)


def _render(obj: Any) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_real(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        return _render(obj.tolist())
    if isinstance(obj, Mapping):
        items = ",".join(f"{json.dumps(str(k), ensure_ascii=False)}:{_render(v)}" for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, Sequence):
        return "[" + ",".join(_render(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__} to wire JSON")


def hit_payload(hit: NeighborHit) -> dict:
    payload: dict[str, Any] = {"id": hit.id, "score": hit.score, "label": hit.label}
    if hit.target_months is not None:
        payload["target_months"] = hit.target_months
    if hit.attributes:
        payload["attributes"] = dict(hit.attributes)
    return payload


def hits_payload(hits: Sequence[NeighborHit]) -> list[dict]:
    return [hit_payload(h) for h in hits]


def class_scores_payload(scores: ClassScores) -> dict:
    return {
        "classes": list(scores.classes),
        "raw": list(scores.raw),
        "probabilities": list(scores.probabilities),
    }


def roc_payload(curve: RocCurve) -> dict:
    return {
        "auc": curve.auc,
        "points": [
            {"threshold": p.threshold, "fpr": p.fpr, "tpr": p.tpr} for p in curve.points
        ],
    }


def mauc_payload(result: MaucResult) -> dict:
    return {
        "mauc": result.mauc,
        "per_class": {cls: result.per_class[cls] for cls in sorted(result.per_class)},
    }


def fairness_payload(report: FairnessReport) -> dict:
    return {
        "grouping": report.grouping,
        "classes": list(report.classes),
        "rows": [
            {
                "group": row.group,
                "per_class": {cls: row.per_class[cls] for cls in report.classes},
                "mauc": row.mauc,
                "support": row.support,
            }
            for row in report.rows
        ],
        "excluded_count": report.excluded_count,
    }


def tune_payload(result: KTuneResult) -> dict:
    return {
        "best_k": result.best_k,
        "table": [{"k": k, "metric": value} for k, value in result.table],
    }
