"""HTTP JSON API over the retrieval and evaluation engine.

All logic lives in the library modules; handlers validate the request,
call the library, and serialize with the canonical wire renderer.  The
whole engine state is one immutable snapshot swapped atomically on
mutation, so a request always observes one corpus generation.
"""

from __future__ import annotations

import dataclasses
import threading
from dataclasses import dataclass, field
from typing import Mapping

from fastapi import FastAPI, Request, Response

from . import wire
from .corpus import Corpus, CorpusError, parse_record_lines
from .decision import (
    DEFAULT_CLASSIFY_K,
    DEFAULT_REGRESS_K,
    ClassifierHead,
    DecisionError,
    classify_knn,
    head_from_corpus,
    regress_knn,
    zeroshot_classify,
)
from .evaluation import EvaluationRun, run_evaluation
from .index import IndexError_, VectorIndex, build_index, search
from .metrics import MetricError, fairness_report
from .volumes import VolumeError, VolumeIndex, build_volume_index, retrieve_volumes

DEFAULT_MAX_BODY_MB = 64


class ApiError(Exception):
    def __init__(self, status: int, error: str, detail: str):
        super().__init__(detail)
        self.status = status
        self.error = error
        self.detail = detail


@dataclass(frozen=True)
class EngineState:
    """One immutable generation of everything a request may read."""

    corpus: Corpus | None = None
    generation: int = 0
    index: VectorIndex | None = None
    index_generation: int | None = None
    volume_indexes: Mapping[str, VolumeIndex] = field(default_factory=dict)
    volume_generation: int | None = None
    heads: Mapping[str, ClassifierHead] = field(default_factory=dict)
    runs: Mapping[str, EvaluationRun] = field(default_factory=dict)


class Engine:
    """Holds the current state snapshot; mutations serialize on one lock."""

    def __init__(self) -> None:
        self._state = EngineState()
        self._mutate = threading.Lock()

    @property
    def state(self) -> EngineState:
        return self._state

    def replace(self, **changes) -> EngineState:
        with self._mutate:
            new_state = dataclasses.replace(self._state, **changes)
            self._state = new_state
            return new_state


def _require_corpus(state: EngineState) -> Corpus:
    if state.corpus is None:
        raise ApiError(409, "no_corpus", "no corpus uploaded; POST /corpus first")
    return state.corpus


def _require_index(state: EngineState) -> VectorIndex:
    _require_corpus(state)
    if state.index is None:
        raise ApiError(409, "no_index", "no index built; POST /index first")
    if state.index_generation != state.generation:
        raise ApiError(
            409, "stale_index", "stale index: corpus was replaced; rebuild via POST /index"
        )
    return state.index


def _json_response(payload, status: int = 200) -> Response:
    return Response(
        content=wire.dumps(payload), status_code=status, media_type="application/json"
    )


def _field(body: Mapping, name: str, kind, required: bool = True, default=None):
    if not isinstance(body, Mapping):
        raise ApiError(400, "bad_request", "request body must be a JSON object")
    if name not in body:
        if required:
            raise ApiError(400, "bad_request", f"missing field {name!r}")
        return default
    value = body[name]
    if kind is int and isinstance(value, bool):
        raise ApiError(400, "bad_request", f"field {name!r} must be an integer")
    if not isinstance(value, kind):
        raise ApiError(400, "bad_request", f"field {name!r} has the wrong type")
    return value


def _vector_field(body: Mapping, name: str = "vector") -> list[float]:
    raw = _field(body, name, list)
    try:
        return [float(x) for x in raw]
    except (TypeError, ValueError):
        raise ApiError(400, "bad_request", f"field {name!r} must be an array of numbers")


def _positive_k(body: Mapping, default: int) -> int:
    k = _field(body, "k", int, required=False, default=default)
    if k < 1:
        raise ApiError(400, "bad_request", f"k must be >= 1, got {k}")
    return k


def _split_or_all(corpus: Corpus, which: str) -> Corpus:
    """Records tagged with the split when any tags exist, else the whole corpus."""
    if all(rec.split is None for rec in corpus.records):
        return corpus
    records = tuple(rec for rec in corpus.records if rec.split == which)
    if not records:
        raise ApiError(409, "no_split", f"corpus has split tags but no {which!r} records")
    return Corpus(dimension=corpus.dimension, records=records, name=f"{corpus.name}.{which}")


def create_app(max_body_mb: int = DEFAULT_MAX_BODY_MB) -> FastAPI:
    app = FastAPI(title="evisearch", docs_url=None, redoc_url=None)
    engine = Engine()
    app.state.engine = engine
    max_body = max_body_mb * 1024 * 1024

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError) -> Response:
        return _json_response({"error": exc.error, "detail": exc.detail}, status=exc.status)

    async def read_body(request: Request) -> bytes:
        body = await request.body()
        if len(body) > max_body:
            raise ApiError(413, "too_large", f"body exceeds {max_body_mb} MiB cap")
        return body

    async def read_json(request: Request) -> Mapping:
        import json

        body = await read_body(request)
        try:
            parsed = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ApiError(400, "bad_request", f"body is not valid JSON: {exc}")
        if not isinstance(parsed, Mapping):
            raise ApiError(400, "bad_request", "request body must be a JSON object")
        return parsed

    @app.get("/health")
    async def health() -> Response:
        return _json_response({"status": "ok"})

    @app.post("/corpus")
    async def upload_corpus(request: Request) -> Response:
        body = await read_body(request)
        try:
            text = body.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ApiError(400, "bad_corpus", f"body is not UTF-8: {exc}")
        lines = text.splitlines()
        if not lines:
            raise ApiError(400, "bad_corpus", "empty corpus")
        try:
            first = lines[0]
            if '"checksum"' in first and '"dimension"' in first and '"id"' not in first:
                # Snapshot payload: verify the checksum over the raw body bytes.
                import json as _json

                header = _json.loads(first)
                from .corpus import fnv1a64

                rest = text[text.find("\n") + 1 :]
                actual = f"{fnv1a64(rest.encode('utf-8')):016x}"
                if actual != header.get("checksum"):
                    raise CorpusError(
                        f"snapshot checksum mismatch: header {header.get('checksum')}, body {actual}"
                    )
                corpus = parse_record_lines(
                    lines[1:], header.get("dimension"), name=header.get("name", "corpus"),
                    first_line_no=2,
                )
            else:
                corpus = parse_record_lines(lines, name="uploaded")
        except CorpusError as exc:
            raise ApiError(400, "bad_corpus", str(exc))
        state = engine.replace(
            corpus=corpus,
            generation=engine.state.generation + 1,
            # Indexes from earlier generations stay visible but stale.
        )
        return _json_response(
            {"dimension": corpus.dimension, "count": len(corpus), "generation": state.generation}
        )

    @app.get("/corpus")
    async def corpus_info() -> Response:
        state = engine.state
        corpus = _require_corpus(state)
        return _json_response(
            {
                "name": corpus.name,
                "dimension": corpus.dimension,
                "count": len(corpus),
                "generation": state.generation,
            }
        )

    @app.post("/index")
    async def build(request: Request) -> Response:
        body = await read_body(request)
        split = "auto"
        if body:
            import json

            try:
                parsed = json.loads(body.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise ApiError(400, "bad_request", f"body is not valid JSON: {exc}")
            if parsed:
                if not isinstance(parsed, Mapping):
                    raise ApiError(400, "bad_request", "request body must be a JSON object")
                split = parsed.get("split", "auto")
        state = engine.state
        corpus = _require_corpus(state)
        try:
            subset = corpus if split == "all" else _split_or_all(corpus, "database")
            index = build_index(subset)
        except CorpusError as exc:
            raise ApiError(400, "bad_corpus", str(exc))
        engine.replace(index=index, index_generation=state.generation)
        return _json_response(
            {"count": index.count, "dimension": index.dimension, "generation": state.generation}
        )

    @app.post("/search")
    async def search_endpoint(request: Request) -> Response:
        body = await read_json(request)
        state = engine.state
        index = _require_index(state)
        vector = _vector_field(body)
        k = _positive_k(body, DEFAULT_CLASSIFY_K)
        try:
            hits = search(index, vector, k)
        except IndexError_ as exc:
            raise ApiError(400, "bad_query", str(exc))
        return _json_response({"hits": wire.hits_payload(hits)})

    @app.post("/search/batch")
    async def search_batch(request: Request) -> Response:
        body = await read_json(request)
        state = engine.state
        index = _require_index(state)
        raw = _field(body, "vectors", list)
        k = _positive_k(body, DEFAULT_CLASSIFY_K)
        results = []
        for pos, vec in enumerate(raw):
            if not isinstance(vec, list):
                raise ApiError(400, "bad_query", f"query {pos}: not an array")
            try:
                results.append(search(index, [float(x) for x in vec], k))
            except (IndexError_, TypeError, ValueError) as exc:
                raise ApiError(400, "bad_query", f"query {pos}: {exc}")
        return _json_response({"results": [wire.hits_payload(hits) for hits in results]})

    @app.post("/classify")
    async def classify(request: Request) -> Response:
        body = await read_json(request)
        state = engine.state
        mode = _field(body, "mode", str, required=False, default="knn")
        vector = _vector_field(body)
        if mode == "knn":
            index = _require_index(state)
            k = _positive_k(body, DEFAULT_CLASSIFY_K)
            try:
                hits = search(index, vector, k)
                scores = classify_knn(hits, k=k, classes=index.class_names())
            except (IndexError_, DecisionError) as exc:
                raise ApiError(400, "bad_query", str(exc))
        elif mode == "zeroshot":
            head_name = _field(body, "head", str, required=False, default=None)
            if not state.heads:
                raise ApiError(409, "no_head", "no classifier head loaded; POST /heads first")
            if head_name is None:
                if len(state.heads) > 1:
                    raise ApiError(400, "bad_request", "several heads loaded; name one")
                head_name = next(iter(state.heads))
            head = state.heads.get(head_name)
            if head is None:
                raise ApiError(400, "unknown_head", f"unknown head {head_name!r}")
            try:
                scores = zeroshot_classify(vector, head)
            except DecisionError as exc:
                raise ApiError(400, "bad_query", str(exc))
        else:
            raise ApiError(400, "bad_request", f"unknown mode {mode!r}")
        return _json_response(wire.class_scores_payload(scores))

    @app.post("/regress")
    async def regress(request: Request) -> Response:
        body = await read_json(request)
        state = engine.state
        index = _require_index(state)
        vector = _vector_field(body)
        k = _positive_k(body, DEFAULT_REGRESS_K)
        try:
            hits = search(index, vector, k)
            months = regress_knn(hits, k=k)
        except (IndexError_, DecisionError) as exc:
            raise ApiError(400, "bad_query", str(exc))
        return _json_response({"months": months})

    @app.post("/heads")
    async def upload_head(request: Request, name: str | None = None) -> Response:
        body = await read_body(request)
        import json

        try:
            text = body.decode("utf-8")
            lines = text.splitlines()
            if not lines:
                raise DecisionError("empty head payload")
            header = json.loads(lines[0])
            if not isinstance(header, dict) or "temperature" not in header:
                raise DecisionError("head header must carry 'temperature'")
            corpus = parse_record_lines(
                lines[1:], header.get("dimension"), name="head", first_line_no=2
            )
            head = head_from_corpus(corpus, float(header["temperature"]))
        except (UnicodeDecodeError, json.JSONDecodeError, CorpusError, DecisionError) as exc:
            raise ApiError(400, "bad_head", str(exc))
        head_name = name or header.get("name") or "default"
        heads = dict(engine.state.heads)
        heads[head_name] = head
        engine.replace(heads=heads)
        return _json_response(
            {
                "name": head_name,
                "classes": list(head.classes),
                "dimension": head.dimension,
                "temperature": head.temperature,
            }
        )

    @app.post("/evaluate")
    async def evaluate(request: Request) -> Response:
        body = await read_json(request)
        state = engine.state
        index = _require_index(state)
        corpus = _require_corpus(state)
        k = _positive_k(body, DEFAULT_CLASSIFY_K)
        run_name = _field(body, "name", str, required=False, default=f"run-{state.generation}")
        test = _split_or_all(corpus, "test")
        try:
            run = run_evaluation(index, test, k=k, name=run_name)
        except (MetricError, DecisionError, IndexError_) as exc:
            raise ApiError(400, "bad_evaluation", str(exc))
        runs = dict(state.runs)
        runs[run_name] = run
        engine.replace(runs=runs)
        return _json_response(run.summary_payload())

    @app.get("/runs")
    async def list_runs() -> Response:
        return _json_response({"runs": sorted(engine.state.runs)})

    @app.get("/roc/{run_name}/{class_name}")
    async def roc(run_name: str, class_name: str) -> Response:
        run = engine.state.runs.get(run_name)
        if run is None:
            raise ApiError(404, "unknown_run", f"unknown run {run_name!r}")
        curve = run.curves.get(class_name)
        if curve is None:
            raise ApiError(404, "unknown_class", f"run {run_name!r} has no curve for {class_name!r}")
        payload = {"run": run_name, "class": class_name}
        payload.update(wire.roc_payload(curve))
        return _json_response(payload)

    @app.post("/fairness")
    async def fairness(request: Request) -> Response:
        body = await read_json(request)
        state = engine.state
        run_name = _field(body, "run", str)
        grouping = _field(body, "grouping", str)
        run = state.runs.get(run_name)
        if run is None:
            raise ApiError(404, "unknown_run", f"unknown run {run_name!r}")
        try:
            report = fairness_report(
                run.attributes, run.probabilities, run.true_labels, grouping
            )
        except MetricError as exc:
            raise ApiError(400, "bad_fairness", str(exc))
        return _json_response(wire.fairness_payload(report))

    @app.post("/volumes/index")
    async def volumes_index(request: Request) -> Response:
        body = await read_json(request)
        state = engine.state
        corpus = _require_corpus(state)
        method = _field(body, "method", str, required=False, default="median")
        try:
            subset = _split_or_all(corpus, "database")
            vindex = build_volume_index(subset, method)
        except (VolumeError, CorpusError) as exc:
            raise ApiError(400, "bad_volumes", str(exc))
        current = dict(state.volume_indexes) if state.volume_generation == state.generation else {}
        current[method] = vindex
        engine.replace(volume_indexes=current, volume_generation=state.generation)
        return _json_response(
            {"volumes": vindex.count, "method": method, "generation": state.generation}
        )

    @app.post("/volumes/search")
    async def volumes_search(request: Request) -> Response:
        body = await read_json(request)
        state = engine.state
        _require_corpus(state)
        method = _field(body, "method", str, required=False, default="median")
        raw_slices = _field(body, "slices", list)
        k = _positive_k(body, 10)
        if state.volume_generation != state.generation or not state.volume_indexes:
            raise ApiError(409, "no_volume_index", "no current volume index; POST /volumes/index")
        vindex = state.volume_indexes.get(method)
        if vindex is None:
            built = ", ".join(sorted(state.volume_indexes))
            raise ApiError(
                400, "aggregation_mismatch",
                f"aggregation mismatch: built with {built}, query used {method!r}",
            )
        try:
            slices = [[float(x) for x in row] for row in raw_slices]
            hits = retrieve_volumes(vindex, slices, method, k)
        except (VolumeError, IndexError_, TypeError, ValueError) as exc:
            raise ApiError(400, "bad_query", str(exc))
        return _json_response({"hits": wire.hits_payload(hits)})

    return app
