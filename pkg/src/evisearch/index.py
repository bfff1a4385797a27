"""Exact top-k retrieval by raw dot product.

Two routes share one scoring kernel: ``search`` selects the top k via
partial selection, ``brute_force_search`` via a full stable sort.  Equal
scores rank by ascending insertion position in both, so the two routes
must return identical hit sequences on every input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import Corpus, CorpusError


class IndexError_(ValueError):
    """Invalid index construction or query input."""


@dataclass(frozen=True)
class NeighborHit:
    """One retrieved record: the unit of decision evidence."""

    id: str
    score: float
    label: str | None = None
    target_months: int | None = None
    attributes: Mapping[str, str] = field(default_factory=dict)


class VectorIndex:
    """Immutable dot-product index over a corpus.

    Entries keep insertion order; vectors live in one contiguous float64
    matrix so scoring is a single matrix-vector product.
    """

    def __init__(
        self,
        ids: Sequence[str],
        matrix: np.ndarray,
        labels: Sequence[str | None],
        attributes: Sequence[Mapping[str, str]],
        target_months: Sequence[int | None],
    ):
        if matrix.ndim != 2 or matrix.shape[0] == 0:
            raise IndexError_("index requires a non-empty 2-D vector matrix")
        self._ids = tuple(ids)
        self._matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        self._matrix.setflags(write=False)
        self._labels = tuple(labels)
        self._attributes = tuple(dict(a) for a in attributes)
        self._target_months = tuple(target_months)

    @property
    def dimension(self) -> int:
        return int(self._matrix.shape[1])

    @property
    def count(self) -> int:
        return int(self._matrix.shape[0])

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def labels(self) -> tuple[str | None, ...]:
        return self._labels

    def class_names(self) -> list[str]:
        """Distinct entry labels, ascending."""
        return sorted({lab for lab in self._labels if lab is not None})

    def entry_vector(self, position: int) -> np.ndarray:
        return self._matrix[position]

    def _hit(self, position: int, score: float) -> NeighborHit:
        return NeighborHit(
            id=self._ids[position],
            score=float(score),
            label=self._labels[position],
            target_months=self._target_months[position],
            attributes=self._attributes[position],
        )

    def _check_query(self, query: Sequence[float]) -> np.ndarray:
        q = np.asarray(query, dtype=np.float64)
        if q.ndim != 1 or q.shape[0] != self.dimension:
            raise IndexError_(
                f"query has dimension {q.shape[0] if q.ndim == 1 else q.shape}, "
                f"index expects {self.dimension}"
            )
        if not np.all(np.isfinite(q)):
            raise IndexError_("query contains non-finite components")
        return q

    def scores(self, query: Sequence[float]) -> np.ndarray:
        """Dot product of the query against every entry, in insertion order."""
        return self._matrix @ self._check_query(query)


def build_index(corpus: Corpus) -> VectorIndex:
    """Index every record of a corpus, preserving insertion order."""
    if not corpus.records:
        raise CorpusError("cannot index an empty corpus")
    matrix = np.array([rec.vector for rec in corpus.records], dtype=np.float64)
    return VectorIndex(
        ids=[rec.id for rec in corpus.records],
        matrix=matrix,
        labels=[rec.label for rec in corpus.records],
        attributes=[rec.attributes for rec in corpus.records],
        target_months=[rec.target_months for rec in corpus.records],
    )


def _check_k(k: int) -> None:
    if k < 1:
        raise IndexError_(f"k must be >= 1, got {k}")


def search(index: VectorIndex, query: Sequence[float], k: int) -> list[NeighborHit]:
    """Top-k entries by dot product, descending; ties by insertion order."""
    _check_k(k)
    scores = index.scores(query)
    n = index.count
    kk = min(k, n)
    if kk < n:
        rough = np.argpartition(-scores, kk - 1)[:kk]
        # A tie crossing the partition boundary makes argpartition's pick
        # arbitrary; widen to every entry matching the k-th score so the
        # sort below can break ties by insertion position.
        threshold = scores[rough].min()
        candidates = np.flatnonzero(scores >= threshold)
    else:
        candidates = np.arange(n)
    # lexsort is keyed last-first: primary descending score, secondary
    # ascending insertion position.
    order = candidates[np.lexsort((candidates, -scores[candidates]))][:kk]
    return [index._hit(int(pos), scores[pos]) for pos in order]


def brute_force_search(index: VectorIndex, query: Sequence[float], k: int) -> list[NeighborHit]:
    """Reference search: score everything, stable-sort, take k."""
    _check_k(k)
    scores = index.scores(query)
    ranked = sorted(range(index.count), key=lambda pos: (-scores[pos], pos))
    return [index._hit(pos, scores[pos]) for pos in ranked[: min(k, index.count)]]


def batch_search(
    index: VectorIndex, queries: Sequence[Sequence[float]], k: int
) -> list[list[NeighborHit]]:
    """Search each query in order; element i equals search(index, queries[i], k)."""
    results = []
    for pos, query in enumerate(queries):
        try:
            results.append(search(index, query, k))
        except IndexError_ as exc:
            raise IndexError_(f"query {pos}: {exc}") from exc
    return results
