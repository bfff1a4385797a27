"""Corpus ingestion, validation, deterministic splitting, and persistence.

A corpus is an immutable, ordered collection of embedding records of one
fixed dimension.  Records arrive as UTF-8 JSON lines; snapshots add a
header line with a checksum so corruption is detected on reload.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

SPLITS = ("database", "validation", "test")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


class CorpusError(ValueError):
    """Malformed, inconsistent, or corrupt corpus data."""


@dataclass(frozen=True)
class EmbeddingRecord:
    """One ingested embedding vector plus its metadata."""

    id: str
    vector: tuple[float, ...]
    label: str | None = None
    attributes: Mapping[str, str] = field(default_factory=dict)
    split: str | None = None
    volume_id: str | None = None
    slice_index: int | None = None
    target_months: int | None = None


@dataclass(frozen=True)
class Corpus:
    """Immutable ordered record collection of one declared dimension."""

    dimension: int
    records: tuple[EmbeddingRecord, ...]
    name: str = "corpus"

    def __len__(self) -> int:
        return len(self.records)


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash (offset 0xCBF29CE484222325, prime 0x100000001B3)."""
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _U64
    return h


def _parse_record(obj: object, line_no: int) -> EmbeddingRecord:
    if not isinstance(obj, dict):
        raise CorpusError(f"line {line_no}: record must be a JSON object")

    rid = obj.get("id")
    if not isinstance(rid, str) or not rid:
        raise CorpusError(f"line {line_no}: 'id' must be a non-empty string")

    raw_vec = obj.get("vector")
    if not isinstance(raw_vec, list) or not raw_vec:
        raise CorpusError(f"line {line_no}: 'vector' must be a non-empty array")
    vector = []
    for comp in raw_vec:
        if isinstance(comp, bool) or not isinstance(comp, (int, float)):
            raise CorpusError(f"line {line_no}: vector component {comp!r} is not a number")
        val = float(comp)
        if not math.isfinite(val):
            raise CorpusError(f"line {line_no}: non-finite vector component")
        vector.append(val)

    label = obj.get("label")
    if label is not None and not isinstance(label, str):
        raise CorpusError(f"line {line_no}: 'label' must be a string")

    attributes = obj.get("attributes", {})
    if not isinstance(attributes, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in attributes.items()
    ):
        raise CorpusError(f"line {line_no}: 'attributes' must be a string-to-string map")

    split = obj.get("split")
    if split is not None and split not in SPLITS:
        raise CorpusError(f"line {line_no}: 'split' must be one of {SPLITS}")

    volume_id = obj.get("volume_id")
    if volume_id is not None and (not isinstance(volume_id, str) or not volume_id):
        raise CorpusError(f"line {line_no}: 'volume_id' must be a non-empty string")
    slice_index = obj.get("slice_index")
    if slice_index is not None and (
        isinstance(slice_index, bool) or not isinstance(slice_index, int) or slice_index < 0
    ):
        raise CorpusError(f"line {line_no}: 'slice_index' must be a non-negative integer")
    if (volume_id is None) != (slice_index is None):
        raise CorpusError(f"line {line_no}: 'volume_id' and 'slice_index' must appear together")

    target_months = obj.get("target_months")
    if target_months is not None and (
        isinstance(target_months, bool) or not isinstance(target_months, int) or target_months < 0
    ):
        raise CorpusError(f"line {line_no}: 'target_months' must be a non-negative integer")

    return EmbeddingRecord(
        id=rid,
        vector=tuple(vector),
        label=label,
        attributes=dict(attributes),
        split=split,
        volume_id=volume_id,
        slice_index=slice_index,
        target_months=target_months,
    )


def parse_record_lines(
    lines: Iterable[str],
    expected_dimension: int | None = None,
    name: str = "corpus",
    first_line_no: int = 1,
) -> Corpus:
    """Parse JSON record lines into a validated Corpus.

    Dimension is taken from the first record unless ``expected_dimension``
    is given.  Blank lines are rejected: every line must hold one record.
    """
    records: list[EmbeddingRecord] = []
    seen_ids: set[str] = set()
    dimension = expected_dimension

    for offset, line in enumerate(lines):
        line_no = first_line_no + offset
        stripped = line.strip()
        if not stripped:
            raise CorpusError(f"line {line_no}: blank line in record stream")
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
        record = _parse_record(obj, line_no)
        if dimension is None:
            dimension = len(record.vector)
        if len(record.vector) != dimension:
            raise CorpusError(
                f"line {line_no}: vector has {len(record.vector)} components, expected {dimension}"
            )
        if record.id in seen_ids:
            raise CorpusError(f"line {line_no}: duplicate id {record.id!r}")
        seen_ids.add(record.id)
        records.append(record)

    if not records:
        raise CorpusError("empty corpus")
    assert dimension is not None
    return Corpus(dimension=dimension, records=tuple(records), name=name)


def load_corpus(path: str | Path, expected_dimension: int | None = None) -> Corpus:
    """Load a line-delimited record file into a Corpus."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    return parse_record_lines(lines, expected_dimension, name=path.stem)


def record_to_json(record: EmbeddingRecord) -> str:
    """Render one record as its canonical JSON line (stable key order)."""
    obj: dict[str, object] = {"id": record.id, "vector": list(record.vector)}
    if record.label is not None:
        obj["label"] = record.label
    if record.attributes:
        obj["attributes"] = dict(record.attributes)
    if record.split is not None:
        obj["split"] = record.split
    if record.volume_id is not None:
        obj["volume_id"] = record.volume_id
        obj["slice_index"] = record.slice_index
    if record.target_months is not None:
        obj["target_months"] = record.target_months
    return json.dumps(obj, separators=(",", ":"))


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _U64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
    return state, z ^ (z >> 31)


def seeded_permutation(n: int, seed: int) -> list[int]:
    """Deterministic permutation of range(n): splitmix64 stream driving
    Fisher-Yates (descending i, j = draw mod (i+1)).
    """
    order = list(range(n))
    state = seed & _U64
    for i in range(n - 1, 0, -1):
        state, draw = _splitmix64(state)
        j = draw % (i + 1)
        order[i], order[j] = order[j], order[i]
    return order


@dataclass(frozen=True)
class SplitResult:
    """The three sub-corpora produced by one deterministic split."""

    database: Corpus
    validation: Corpus
    test: Corpus

    def __iter__(self):
        return iter((self.database, self.validation, self.test))


def split_corpus(
    corpus: Corpus,
    ratios: tuple[float, float, float],
    seed: int,
) -> SplitResult:
    """Partition a corpus into (database, validation, test) sub-corpora.

    Records are shuffled by ``seeded_permutation`` and cut contiguously:
    the database gets floor(n*r_db) records, validation floor(n*r_val),
    and the test split the remainder.  Every output record carries the
    matching split tag.
    """
    r_db, r_val, r_test = ratios
    for r in ratios:
        if not 0.0 <= r <= 1.0:
            raise CorpusError(f"ratio {r} outside [0, 1]")
    if abs((r_db + r_val + r_test) - 1.0) > 1e-9:
        raise CorpusError(f"ratios {ratios} do not sum to 1")

    n = len(corpus.records)
    order = seeded_permutation(n, seed)
    shuffled = [corpus.records[i] for i in order]

    n_db = math.floor(n * r_db)
    n_val = math.floor(n * r_val)
    parts = (shuffled[:n_db], shuffled[n_db : n_db + n_val], shuffled[n_db + n_val :])

    out = []
    for split_name, part in zip(SPLITS, parts):
        tagged = tuple(dataclasses.replace(rec, split=split_name) for rec in part)
        out.append(
            Corpus(dimension=corpus.dimension, records=tagged, name=f"{corpus.name}.{split_name}")
        )
    return SplitResult(database=out[0], validation=out[1], test=out[2])


def hu_window(values: Sequence[float], lo: float = -1000.0, hi: float = 1000.0) -> list[int]:
    """Map CT attenuation values onto 8-bit intensities.

    Each value is clamped to [lo, hi] and scaled linearly onto [0, 255]
    with round-half-up, so lo maps to 0 and hi to 255.
    """
    if hi <= lo:
        raise CorpusError(f"invalid window: hi ({hi}) must exceed lo ({lo})")
    span = hi - lo
    out = []
    for v in values:
        clamped = min(max(v, lo), hi)
        out.append(math.floor((clamped - lo) / span * 255.0 + 0.5))
    return out


def save_snapshot(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus snapshot: checksummed header line plus record lines."""
    body_lines = [record_to_json(rec) for rec in corpus.records]
    body = "".join(line + "\n" for line in body_lines)
    body_bytes = body.encode("utf-8")
    header = {
        "dimension": corpus.dimension,
        "name": corpus.name,
        "checksum": f"{fnv1a64(body_bytes):016x}",
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        fh.write(body)


def load_snapshot(path: str | Path) -> Corpus:
    """Reload a snapshot, verifying the header checksum over the body bytes."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    newline = text.find("\n")
    if newline < 0:
        raise CorpusError("snapshot missing header line")
    header_line, body = text[:newline], text[newline + 1 :]
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"snapshot header is not valid JSON ({exc.msg})") from exc
    if not isinstance(header, dict) or "dimension" not in header or "checksum" not in header:
        raise CorpusError("snapshot header must carry 'dimension' and 'checksum'")

    expected = header["checksum"]
    actual = f"{fnv1a64(body.encode('utf-8')):016x}"
    if actual != expected:
        raise CorpusError(f"snapshot checksum mismatch: header {expected}, body {actual}")

    dimension = header["dimension"]
    if not isinstance(dimension, int) or dimension < 1:
        raise CorpusError("snapshot header 'dimension' must be a positive integer")
    name = header.get("name", path.stem)

    lines = body.splitlines()
    if not lines:
        # Snapshots, unlike raw record files, may legitimately be empty:
        # the dimension is declared in the header.
        return Corpus(dimension=dimension, records=(), name=name)
    corpus = parse_record_lines(lines, dimension, name=name, first_line_no=2)
    return Corpus(dimension=dimension, records=corpus.records, name=name)
