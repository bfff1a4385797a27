"""Neighbor evidence to predictions.

Weighted-vote KNN classification with post-softmax confidences,
weighted-mode regression in months, zero-shot classification against
text-anchor heads, and validation-driven choice of k.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Corpus, CorpusError, fnv1a64, parse_record_lines, record_to_json, EmbeddingRecord
from .index import NeighborHit, VectorIndex, search
from .metrics import balanced_accuracy, mauc

DEFAULT_CLASSIFY_K = 20
DEFAULT_REGRESS_K = 100


class DecisionError(ValueError):
    """Unusable evidence or malformed classifier-head input."""


@dataclass(frozen=True)
class ClassScores:
    """Per-class vote totals and their softmax probabilities."""

    classes: tuple[str, ...]
    raw: tuple[float, ...]
    probabilities: tuple[float, ...]

    def argmax(self) -> str:
        best = max(range(len(self.classes)), key=lambda i: self.probabilities[i])
        return self.classes[best]

    def as_mapping(self) -> dict[str, float]:
        return dict(zip(self.classes, self.probabilities))


def softmax(raw: Sequence[float]) -> tuple[float, ...]:
    """Max-shifted softmax; exact 1.0 for a single entry."""
    arr = np.asarray(raw, dtype=np.float64)
    shifted = np.exp(arr - arr.max())
    return tuple(float(x) for x in shifted / shifted.sum())


def classify_knn(
    hits: Sequence[NeighborHit],
    k: int = DEFAULT_CLASSIFY_K,
    classes: Sequence[str] | None = None,
    aggregate: str = "sum",
) -> ClassScores:
    """Aggregate dot-product weights of the first min(k, |hits|) hits per label.

    Each hit's score adds to its label's vote; probabilities are the
    softmax of the vote totals at temperature 1.  ``classes`` widens the
    class list beyond the labels seen among the hits (absent classes vote
    0, keeping nonzero probability).  ``aggregate="mean"`` divides each
    total by its hit count instead of summing.
    """
    if k < 1:
        raise DecisionError(f"k must be >= 1, got {k}")
    if aggregate not in ("sum", "mean"):
        raise DecisionError(f"aggregate must be 'sum' or 'mean', got {aggregate!r}")
    used = hits[: min(k, len(hits))]
    if not used:
        raise DecisionError("no hits to classify from")

    votes: dict[str, float] = {c: 0.0 for c in classes} if classes is not None else {}
    counts: dict[str, int] = {}
    for hit in used:
        if hit.label is None:
            raise DecisionError(f"hit {hit.id!r} carries no label")
        votes[hit.label] = votes.get(hit.label, 0.0) + hit.score
        counts[hit.label] = counts.get(hit.label, 0) + 1
    if aggregate == "mean":
        votes = {c: (v / counts[c] if c in counts else v) for c, v in votes.items()}

    ordered = tuple(sorted(votes))
    raw = tuple(votes[c] for c in ordered)
    return ClassScores(classes=ordered, raw=raw, probabilities=softmax(raw))


def regress_knn(hits: Sequence[NeighborHit], k: int = DEFAULT_REGRESS_K) -> int:
    """Weighted mode over the hit month targets.

    Accumulates each hit's score onto its target_months value and returns
    the value with the largest total; ties resolve to the smaller value.
    """
    if k < 1:
        raise DecisionError(f"k must be >= 1, got {k}")
    used = hits[: min(k, len(hits))]
    if not used:
        raise DecisionError("no hits to regress from")
    weights: dict[int, float] = {}
    for hit in used:
        if hit.target_months is None:
            raise DecisionError(f"hit {hit.id!r} carries no target_months")
        weights[hit.target_months] = weights.get(hit.target_months, 0.0) + hit.score
    return min(weights, key=lambda months: (-weights[months], months))


@dataclass(frozen=True)
class ClassifierHead:
    """Per-class text-anchor embeddings acting as a linear classifier."""

    classes: tuple[str, ...]
    anchors: tuple[tuple[float, ...], ...]
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if len(self.classes) != len(self.anchors):
            raise DecisionError("one anchor per class required")
        if len(set(self.classes)) != len(self.classes):
            raise DecisionError("head classes must be unique")
        if not self.temperature > 0:
            raise DecisionError(f"temperature must be positive, got {self.temperature}")

    @property
    def dimension(self) -> int:
        return len(self.anchors[0])


def zeroshot_classify(image_embedding: Sequence[float], head: ClassifierHead) -> ClassScores:
    """Score an embedding against each class anchor and softmax the result."""
    query = np.asarray(image_embedding, dtype=np.float64)
    if query.ndim != 1 or query.shape[0] != head.dimension:
        raise DecisionError(
            f"embedding has dimension {query.shape}, head expects {head.dimension}"
        )
    anchors = np.asarray(head.anchors, dtype=np.float64)
    raw = tuple(float(x) for x in (anchors @ query) / head.temperature)
    return ClassScores(classes=head.classes, raw=raw, probabilities=softmax(raw))


def head_from_corpus(corpus: Corpus, temperature: float = 1.0) -> ClassifierHead:
    """Build a head from records whose labels name the classes."""
    classes = []
    anchors = []
    for rec in corpus.records:
        if rec.label is None:
            raise DecisionError(f"head record {rec.id!r} carries no class label")
        classes.append(rec.label)
        anchors.append(rec.vector)
    if not classes:
        raise DecisionError("head needs at least one anchor record")
    return ClassifierHead(classes=tuple(classes), anchors=tuple(anchors), temperature=temperature)


def load_head(path: str | Path) -> ClassifierHead:
    """Load a classifier head file: snapshot-style header plus anchor lines.

    The header carries dimension, temperature, and the body checksum; each
    record line's label names a class and its vector is the anchor.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    newline = text.find("\n")
    if newline < 0:
        raise DecisionError("head file missing header line")
    header_line, body = text[:newline], text[newline + 1 :]
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise DecisionError(f"head header is not valid JSON ({exc.msg})") from exc
    if not isinstance(header, dict) or "temperature" not in header:
        raise DecisionError("head header must carry 'temperature'")
    if "checksum" in header:
        actual = f"{fnv1a64(body.encode('utf-8')):016x}"
        if actual != header["checksum"]:
            raise DecisionError(
                f"head checksum mismatch: header {header['checksum']}, body {actual}"
            )
    temperature = header["temperature"]
    if not isinstance(temperature, (int, float)) or not temperature > 0:
        raise DecisionError("head 'temperature' must be a positive number")
    try:
        corpus = parse_record_lines(
            body.splitlines(), header.get("dimension"), name=path.stem, first_line_no=2
        )
    except CorpusError as exc:
        raise DecisionError(f"head body invalid: {exc}") from exc
    return head_from_corpus(corpus, float(temperature))


def save_head(head: ClassifierHead, path: str | Path, name: str = "head") -> None:
    """Write a classifier head in the snapshot-with-temperature format."""
    records = [
        EmbeddingRecord(id=f"anchor-{i}", vector=anchor, label=cls)
        for i, (cls, anchor) in enumerate(zip(head.classes, head.anchors))
    ]
    body = "".join(record_to_json(rec) + "\n" for rec in records)
    header = {
        "dimension": head.dimension,
        "name": name,
        "checksum": f"{fnv1a64(body.encode('utf-8')):016x}",
        "temperature": head.temperature,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        fh.write(body)


@dataclass(frozen=True)
class KTuneResult:
    best_k: int
    table: tuple[tuple[int, float], ...]  # (k, metric value), in candidate order


def tune_k(
    index: VectorIndex,
    validation: Corpus,
    candidate_ks: Sequence[int],
    metric: str = "mAUC",
) -> KTuneResult:
    """Pick the voting k that maximizes a validation metric.

    Every validation record is classified by search + weighted vote at
    each candidate k; the best k wins, ties going to the smaller k.
    """
    if not candidate_ks:
        raise DecisionError("candidate_ks must be non-empty")
    for k in candidate_ks:
        if k < 1:
            raise DecisionError(f"candidate k must be >= 1, got {k}")
    if metric not in ("mAUC", "BACC"):
        raise DecisionError(f"metric must be 'mAUC' or 'BACC', got {metric!r}")
    if not validation.records:
        raise DecisionError("validation corpus is empty")
    for rec in validation.records:
        if rec.label is None:
            raise DecisionError(f"validation record {rec.id!r} carries no label")

    database_classes = index.class_names()
    missing = sorted({rec.label for rec in validation.records} - set(database_classes))
    if missing:
        warnings.warn(
            f"classes absent from the database are unscorable: {', '.join(missing)}"
        )

    true_labels = [rec.label for rec in validation.records]
    max_k = min(max(candidate_ks), index.count)
    all_hits = [search(index, rec.vector, max_k) for rec in validation.records]

    table = []
    for k in candidate_ks:
        scores = [
            classify_knn(hits, k=k, classes=database_classes) for hits in all_hits
        ]
        if metric == "mAUC":
            value = mauc([s.as_mapping() for s in scores], true_labels).mauc
        else:
            value = balanced_accuracy([s.argmax() for s in scores], true_labels)
        table.append((k, value))

    best_k = min(table, key=lambda kv: (-kv[1], kv[0]))[0]
    return KTuneResult(best_k=best_k, table=tuple(table))
