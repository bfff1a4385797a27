"""3D retrieval over per-slice embeddings.

Slices of a volume collapse into one representative vector by a
componentwise pooling (median by default), volumes are searched by dot
product like any other index, and rankings are scored with Precision@k
and Average Precision against tumor flag or stage.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus
from .index import NeighborHit, VectorIndex
from .index import search as index_search

AGGREGATIONS = ("median", "mean", "max", "stdev")


class VolumeError(ValueError):
    """Inconsistent volume metadata or mismatched aggregation."""


@dataclass(frozen=True)
class VolumeEmbedding:
    """Representative vector for one volume plus its retrieval metadata."""

    volume_id: str
    vector: tuple[float, ...]
    aggregation: str
    slice_count: int
    tumor_flag: bool | None = None
    tumor_stage: str | None = None


def aggregate_slices(slice_vectors: Sequence[Sequence[float]], method: str = "median") -> np.ndarray:
    """Pool slice vectors componentwise into one volume vector.

    median of an even count is the midpoint of the middle pair; stdev is
    the population standard deviation (divide by n).
    """
    if method not in AGGREGATIONS:
        raise VolumeError(f"unknown aggregation {method!r}; expected one of {AGGREGATIONS}")
    if len(slice_vectors) == 0:
        raise VolumeError("cannot aggregate zero slices")
    matrix = np.asarray(slice_vectors, dtype=np.float64)
    if matrix.ndim != 2:
        raise VolumeError("slice vectors must share one dimension")
    if method == "median":
        return np.median(matrix, axis=0)
    if method == "mean":
        return matrix.mean(axis=0)
    if method == "max":
        return matrix.max(axis=0)
    return matrix.std(axis=0)


def _parse_flag(raw: str, volume_id: str) -> bool:
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise VolumeError(f"volume {volume_id!r}: tumor_flag must be 'true' or 'false', got {raw!r}")


class VolumeIndex:
    """Dot-product index over per-volume embeddings, pinned to one pooling method."""

    def __init__(self, index: VectorIndex, method: str, volumes: dict[str, VolumeEmbedding]):
        self.index = index
        self.method = method
        self.volumes = volumes

    @property
    def count(self) -> int:
        return self.index.count


def build_volume_index(corpus: Corpus, method: str = "median") -> VolumeIndex:
    """Group corpus records by volume, pool their slices, and index the result.

    Per-volume tumor metadata rides on record attributes (``tumor_flag``,
    ``tumor_stage``) and must agree across all slices of a volume.
    """
    if method not in AGGREGATIONS:
        raise VolumeError(f"unknown aggregation {method!r}; expected one of {AGGREGATIONS}")

    slices: dict[str, list] = {}
    order: list[str] = []
    flags: dict[str, str | None] = {}
    stages: dict[str, str | None] = {}
    for rec in corpus.records:
        if rec.volume_id is None or rec.slice_index is None:
            raise VolumeError(f"record {rec.id!r} lacks volume_id/slice_index")
        vid = rec.volume_id
        if vid not in slices:
            slices[vid] = []
            order.append(vid)
            flags[vid] = rec.attributes.get("tumor_flag")
            stages[vid] = rec.attributes.get("tumor_stage")
        else:
            if rec.attributes.get("tumor_flag") != flags[vid]:
                raise VolumeError(f"volume {vid!r}: conflicting tumor_flag across slices")
            if rec.attributes.get("tumor_stage") != stages[vid]:
                raise VolumeError(f"volume {vid!r}: conflicting tumor_stage across slices")
        slices[vid].append((rec.slice_index, rec.vector))
    if not order:
        raise VolumeError("corpus holds no volume records")

    volumes: dict[str, VolumeEmbedding] = {}
    vectors = []
    attributes = []
    for vid in order:
        ordered = [vec for _, vec in sorted(slices[vid], key=lambda pair: pair[0])]
        pooled = aggregate_slices(ordered, method)
        flag = None if flags[vid] is None else _parse_flag(flags[vid], vid)
        volumes[vid] = VolumeEmbedding(
            volume_id=vid,
            vector=tuple(float(x) for x in pooled),
            aggregation=method,
            slice_count=len(ordered),
            tumor_flag=flag,
            tumor_stage=stages[vid],
        )
        vectors.append(pooled)
        attrs = {}
        if flags[vid] is not None:
            attrs["tumor_flag"] = flags[vid]
        if stages[vid] is not None:
            attrs["tumor_stage"] = stages[vid]
        attributes.append(attrs)

    index = VectorIndex(
        ids=order,
        matrix=np.asarray(vectors, dtype=np.float64),
        labels=[stages[vid] for vid in order],
        attributes=attributes,
        target_months=[None] * len(order),
    )
    return VolumeIndex(index=index, method=method, volumes=volumes)


def retrieve_volumes(
    volume_index: VolumeIndex,
    query_slices: Sequence[Sequence[float]],
    method: str,
    k: int,
) -> list[NeighborHit]:
    """Pool the query slices and run top-k dot-product search over volumes.

    The query pooling method must equal the index's; a mismatch is an
    error rather than a silent recompute.
    """
    if method != volume_index.method:
        raise VolumeError(
            f"aggregation mismatch: index built with {volume_index.method!r}, query used {method!r}"
        )
    query = aggregate_slices(query_slices, method)
    return index_search(volume_index.index, query, k)


def precision_at_k(
    hits: Sequence[NeighborHit], relevant: Callable[[NeighborHit], bool], k: int
) -> float:
    """Fraction of the first min(k, |hits|) hits that are relevant."""
    if k < 1:
        raise VolumeError(f"k must be >= 1, got {k}")
    if not hits:
        raise VolumeError("empty hit list")
    top = hits[: min(k, len(hits))]
    return sum(1 for hit in top if relevant(hit)) / len(top)


def average_precision(
    hits: Sequence[NeighborHit], relevant: Callable[[NeighborHit], bool]
) -> float:
    """Mean of Precision@rank over the relevant ranks of the returned list.

    Normalized by the count of relevant hits within the list; 0 when the
    list holds none.
    """
    if not hits:
        raise VolumeError("empty hit list")
    seen_relevant = 0
    precision_sum = 0.0
    for rank, hit in enumerate(hits, start=1):
        if relevant(hit):
            seen_relevant += 1
            precision_sum += seen_relevant / rank
    if seen_relevant == 0:
        return 0.0
    return precision_sum / seen_relevant


def flag_relevance(query_flag: bool) -> Callable[[NeighborHit], bool]:
    """Relevance predicate: hit's tumor_flag equals the query's."""

    def predicate(hit: NeighborHit) -> bool:
        return hit.attributes.get("tumor_flag") == ("true" if query_flag else "false")

    return predicate


def stage_relevance(query_stage: str) -> Callable[[NeighborHit], bool]:
    """Relevance predicate: hit's tumor_stage string equals the query's."""

    def predicate(hit: NeighborHit) -> bool:
        return hit.attributes.get("tumor_stage") == query_stage

    return predicate
