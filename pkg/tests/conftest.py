"""Shared builders for corpora, record files, and random fixtures."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from evisearch.corpus import Corpus, EmbeddingRecord


def make_record(
    rid: str,
    vector,
    label=None,
    attributes=None,
    split=None,
    volume_id=None,
    slice_index=None,
    target_months=None,
) -> EmbeddingRecord:
    return EmbeddingRecord(
        id=rid,
        vector=tuple(float(x) for x in vector),
        label=label,
        attributes=dict(attributes or {}),
        split=split,
        volume_id=volume_id,
        slice_index=slice_index,
        target_months=target_months,
    )


def make_corpus(vectors, labels=None, name="fixture", **record_kwargs) -> Corpus:
    """Corpus from a list of vectors, ids r0, r1, ..."""
    records = []
    for i, vec in enumerate(vectors):
        label = labels[i] if labels is not None else None
        records.append(make_record(f"r{i}", vec, label=label, **record_kwargs))
    return Corpus(dimension=len(vectors[0]), records=tuple(records), name=name)


def random_corpus(rng: np.random.Generator, n: int, dim: int, labels=None) -> Corpus:
    vectors = rng.normal(size=(n, dim))
    lab = None
    if labels:
        lab = [labels[int(i)] for i in rng.integers(0, len(labels), n)]
    return make_corpus(vectors.tolist(), lab, name="random")


def write_record_lines(path: Path, records) -> Path:
    lines = []
    for rec in records:
        obj = {"id": rec.id, "vector": list(rec.vector)}
        if rec.label is not None:
            obj["label"] = rec.label
        if rec.attributes:
            obj["attributes"] = dict(rec.attributes)
        if rec.split is not None:
            obj["split"] = rec.split
        if rec.volume_id is not None:
            obj["volume_id"] = rec.volume_id
            obj["slice_index"] = rec.slice_index
        if rec.target_months is not None:
            obj["target_months"] = rec.target_months
        lines.append(json.dumps(obj))
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
