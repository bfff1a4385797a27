"""Synthetic Gaussian cluster data for end-to-end checks and the toy trainer.

Cluster centers sit on orthogonal axes, scaled so every pair of centers
is ``separation`` noise standard deviations apart.  All sampling is
driven by a caller-owned seed for reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, EmbeddingRecord


@dataclass(frozen=True)
class ClusterSpec:
    """Geometry of a synthetic labeled-cluster population."""

    n_clusters: int = 3
    dimension: int = 16
    separation: float = 4.0  # pairwise center distance, in units of noise sigma
    noise: float = 1.0
    label_prefix: str = "cluster"

    def __post_init__(self) -> None:
        if self.n_clusters < 1 or self.dimension < self.n_clusters:
            raise ValueError("need dimension >= n_clusters >= 1")
        if self.noise <= 0 or self.separation < 0:
            raise ValueError("noise must be positive and separation non-negative")

    def centers(self) -> np.ndarray:
        """One center per cluster: axis-aligned, pairwise distance = separation * noise."""
        radius = self.separation * self.noise / np.sqrt(2.0)
        centers = np.zeros((self.n_clusters, self.dimension))
        for c in range(self.n_clusters):
            centers[c, c] = radius
        return centers

    def label(self, cluster: int) -> str:
        return f"{self.label_prefix}-{cluster}"


def sample_features(
    spec: ClusterSpec, n_per_cluster: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw n_per_cluster points around each center; returns (features, cluster ids)."""
    centers = spec.centers()
    features = []
    targets = []
    for c in range(spec.n_clusters):
        noise = rng.normal(0.0, spec.noise, (n_per_cluster, spec.dimension))
        features.append(centers[c] + noise)
        targets.extend([c] * n_per_cluster)
    return np.vstack(features), np.asarray(targets, dtype=np.intp)


def batch_sampler(spec: ClusterSpec):
    """Adapt a cluster spec to the toy trainer's (batch_size, rng) protocol.

    Each call draws batch_size points with uniformly random cluster ids.
    """

    def sample(batch_size: int, rng: np.random.Generator):
        centers = spec.centers()
        targets = rng.integers(0, spec.n_clusters, batch_size)
        features = centers[targets] + rng.normal(0.0, spec.noise, (batch_size, spec.dimension))
        return features, targets

    return sample


def cluster_corpus(
    spec: ClusterSpec,
    n_per_cluster: int,
    seed: int,
    name: str = "synthetic",
    id_prefix: str = "rec",
) -> Corpus:
    """Materialize a labeled corpus of cluster samples."""
    rng = np.random.default_rng(seed)
    features, targets = sample_features(spec, n_per_cluster, rng)
    records = tuple(
        EmbeddingRecord(
            id=f"{id_prefix}-{i:05d}",
            vector=tuple(float(x) for x in features[i]),
            label=spec.label(int(targets[i])),
        )
        for i in range(features.shape[0])
    )
    return Corpus(dimension=spec.dimension, records=records, name=name)
