"""Command-line front door over the library.

Every subcommand is a thin wrapper around library calls: parse flags,
load inputs, run, print TSV or wire JSON.  Exit codes: 0 success,
1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import wire
from .contrastive import (
    ContrastiveError,
    TrainConfig,
    UniclBatch,
    export_trace,
    finite_diff_check,
    toy_train,
)
from .corpus import (
    Corpus,
    CorpusError,
    load_corpus,
    load_snapshot,
    record_to_json,
    save_snapshot,
    split_corpus,
)
from .decision import (
    DEFAULT_CLASSIFY_K,
    DEFAULT_REGRESS_K,
    DecisionError,
    classify_knn,
    load_head,
    regress_knn,
    zeroshot_classify,
)
from .evaluation import run_evaluation, write_report
from .index import IndexError_, build_index, search
from .metrics import MetricError, fairness_report
from .synthetic import ClusterSpec, batch_sampler
from .volumes import (
    VolumeError,
    average_precision,
    build_volume_index,
    flag_relevance,
    precision_at_k,
    retrieve_volumes,
    stage_relevance,
)

DATA_ERRORS = (
    CorpusError,
    IndexError_,
    DecisionError,
    MetricError,
    VolumeError,
    ContrastiveError,
    OSError,
    ValueError,
)


def _info(args: argparse.Namespace, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _load_any(path: str) -> Corpus:
    """Accept either a snapshot (header line) or bare record lines."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    try:
        head = json.loads(first) if first.strip() else {}
    except json.JSONDecodeError:
        head = {}
    if isinstance(head, dict) and "checksum" in head and "id" not in head:
        return load_snapshot(path)
    return load_corpus(path)


def _parse_vector(text: str) -> list[float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if not parts:
        raise CorpusError("empty query vector")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise CorpusError(f"bad query vector: {exc}")


def _query_vectors(args: argparse.Namespace) -> list[list[float]]:
    if getattr(args, "query", None):
        return [_parse_vector(args.query)]
    path = getattr(args, "query_file", None)
    if not path:
        raise CorpusError("provide --query or --query-file")
    vectors = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                vectors.append(_parse_vector(line))
    if not vectors:
        raise CorpusError(f"no query vectors in {path}")
    return vectors


def _database_subset(corpus: Corpus) -> Corpus:
    if all(rec.split is None for rec in corpus.records):
        return corpus
    records = tuple(rec for rec in corpus.records if rec.split == "database")
    if not records:
        raise CorpusError("corpus has split tags but no database records")
    return Corpus(dimension=corpus.dimension, records=records, name=f"{corpus.name}.database")


def _print_table(rows: Sequence[Sequence[object]]) -> None:
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, float):
                cells.append(wire.format_real(cell).strip('"'))
            elif cell is None:
                cells.append("")
            else:
                cells.append(str(cell))
        print("\t".join(cells))


def _emit(args: argparse.Namespace, rows: Sequence[Sequence[object]], payload) -> None:
    if args.format == "json":
        print(wire.dumps(payload))
    else:
        _print_table(rows)


def _hit_rows(hits, with_query: int | None = None):
    rows = []
    for hit in hits:
        row = [hit.id, hit.score, hit.label if hit.label is not None else ""]
        if with_query is not None:
            row.insert(0, with_query)
        rows.append(row)
    return rows


# ---------------------------------------------------------------- handlers


def cmd_ingest(args: argparse.Namespace) -> int:
    corpus = _load_any(args.input)
    if args.out:
        save_snapshot(corpus, args.out)
        _info(args, f"snapshot written to {args.out}")
    labeled = sum(1 for r in corpus.records if r.label is not None)
    splits: dict[str, int] = {}
    for rec in corpus.records:
        if rec.split is not None:
            splits[rec.split] = splits.get(rec.split, 0) + 1
    rows = [
        ["name", corpus.name],
        ["dimension", corpus.dimension],
        ["count", len(corpus)],
        ["labeled", labeled],
    ]
    for split_name in sorted(splits):
        rows.append([f"split.{split_name}", splits[split_name]])
    payload = {
        "name": corpus.name,
        "dimension": corpus.dimension,
        "count": len(corpus),
        "labeled": labeled,
        "splits": splits,
    }
    _emit(args, rows, payload)
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    corpus = _load_any(args.input)
    try:
        parts = [float(p) for p in args.ratios.split(",")]
    except ValueError as exc:
        raise CorpusError(f"bad --ratios: {exc}")
    if len(parts) != 3:
        raise CorpusError(f"--ratios needs three comma-separated values, got {len(parts)}")
    result = split_corpus(corpus, (parts[0], parts[1], parts[2]), args.seed)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for split_name, part in (
        ("database", result.database),
        ("validation", result.validation),
        ("test", result.test),
    ):
        path = Path(f"{prefix}.{split_name}.jsonl")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for rec in part.records:
                fh.write(record_to_json(rec) + "\n")
        written.append((split_name, len(part), str(path)))
    rows = [[name, count, path] for name, count, path in written]
    payload = {name: {"count": count, "path": path} for name, count, path in written}
    _emit(args, rows, payload)
    return 0


def cmd_index(args: argparse.Namespace) -> int:
    corpus = _load_any(args.input)
    subset = corpus if args.all else _database_subset(corpus)
    index = build_index(subset)
    if args.out:
        save_snapshot(subset, args.out)
        _info(args, f"indexed subset snapshot written to {args.out}")
    rows = [
        ["count", index.count],
        ["dimension", index.dimension],
        ["classes", ",".join(index.class_names())],
    ]
    payload = {
        "count": index.count,
        "dimension": index.dimension,
        "classes": list(index.class_names()),
    }
    _emit(args, rows, payload)
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    index = build_index(_database_subset(_load_any(args.db)))
    vectors = _query_vectors(args)
    if len(vectors) == 1:
        hits = search(index, vectors[0], args.k)
        _emit(args, _hit_rows(hits), {"hits": wire.hits_payload(hits)})
    else:
        rows = []
        results = []
        for pos, vec in enumerate(vectors):
            hits = search(index, vec, args.k)
            rows.extend(_hit_rows(hits, with_query=pos))
            results.append(wire.hits_payload(hits))
        _emit(args, rows, {"results": results})
    return 0


def _scores_rows(scores):
    rows = []
    for pos, name in enumerate(scores.classes):
        rows.append([name, scores.raw[pos], scores.probabilities[pos]])
    return rows


def cmd_classify(args: argparse.Namespace) -> int:
    if args.mode == "zeroshot":
        return cmd_zeroshot(args)
    index = build_index(_database_subset(_load_any(args.db)))
    (vector,) = _query_vectors(args)
    hits = search(index, vector, args.k)
    scores = classify_knn(hits, k=args.k, classes=index.class_names())
    _emit(args, _scores_rows(scores), wire.class_scores_payload(scores))
    return 0


def cmd_regress(args: argparse.Namespace) -> int:
    index = build_index(_database_subset(_load_any(args.db)))
    (vector,) = _query_vectors(args)
    hits = search(index, vector, args.k)
    months = regress_knn(hits, k=args.k)
    _emit(args, [["months", months]], {"months": months})
    return 0


def cmd_zeroshot(args: argparse.Namespace) -> int:
    if not getattr(args, "head", None):
        raise CorpusError("zeroshot needs --head")
    head = load_head(args.head)
    (vector,) = _query_vectors(args)
    scores = zeroshot_classify(vector, head)
    _emit(args, _scores_rows(scores), wire.class_scores_payload(scores))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    index = build_index(_database_subset(_load_any(args.db)))
    test = _load_any(args.test)
    run = run_evaluation(
        index, test, k=args.k, k_regress=args.k_regress, name=args.name
    )
    out_dir = Path(args.out_dir)
    paths = write_report(run, out_dir, args.name)
    for path in paths:
        _info(args, f"wrote {path}")
    rows = [["mauc", run.mauc], ["accuracy", run.accuracy], ["balanced_accuracy", run.balanced_accuracy]]
    if run.l1_months is not None:
        rows.append(["l1_months", run.l1_months])
    _emit(args, rows, run.summary_payload())
    return 0


def cmd_fairness(args: argparse.Namespace) -> int:
    index = build_index(_database_subset(_load_any(args.db)))
    test = _load_any(args.test)
    run = run_evaluation(index, test, k=args.k, name="fairness")
    report = fairness_report(run.attributes, run.probabilities, run.true_labels, args.grouping)
    header = ["group", "support", "mauc"] + list(report.classes)
    rows: list[list[object]] = [header]
    for row in report.rows:
        cells: list[object] = [row.group, row.support, row.mauc]
        for cls in report.classes:
            cells.append(row.per_class.get(cls))
        rows.append(cells)
    rows.append(["(excluded)", report.excluded_count, None] + [None] * len(report.classes))
    _emit(args, rows, wire.fairness_payload(report))
    return 0


def cmd_volumes_index(args: argparse.Namespace) -> int:
    vindex = build_volume_index(_database_subset(_load_any(args.db)), args.method)
    rows = []
    payload_rows = []
    for volume_id in vindex.index.ids:
        vol = vindex.volumes[volume_id]
        rows.append([volume_id, vol.slice_count, vol.tumor_flag or "", vol.tumor_stage or ""])
        payload_rows.append(
            {
                "volume_id": volume_id,
                "slices": vol.slice_count,
                "tumor_flag": vol.tumor_flag,
                "tumor_stage": vol.tumor_stage,
            }
        )
    _emit(args, rows, {"method": args.method, "volumes": payload_rows})
    return 0


def _query_volume_slices(path: str) -> list[list[float]]:
    corpus = _load_any(path)
    records = list(corpus.records)
    if all(rec.slice_index is not None for rec in records):
        records.sort(key=lambda rec: rec.slice_index)
    return [list(rec.vector) for rec in records]


def cmd_volumes_search(args: argparse.Namespace) -> int:
    vindex = build_volume_index(_database_subset(_load_any(args.db)), args.method)
    slices = _query_volume_slices(args.query_volume)
    hits = retrieve_volumes(vindex, slices, args.method, args.k)
    rows = []
    for hit in hits:
        rows.append(
            [
                hit.id,
                hit.score,
                hit.attributes.get("tumor_flag", ""),
                hit.attributes.get("tumor_stage", ""),
            ]
        )
    _emit(args, rows, {"hits": wire.hits_payload(hits)})
    return 0


def cmd_volumes_eval(args: argparse.Namespace) -> int:
    vindex = build_volume_index(_database_subset(_load_any(args.db)), args.method)
    queries = _load_any(args.queries)
    query_index = build_volume_index(queries, args.method)
    cutoffs = (3, 5, 10)
    modes = ("flag", "stage")
    sums = {mode: {f"p@{c}": 0.0 for c in cutoffs} | {"ap": 0.0} for mode in modes}
    n_queries = 0
    for volume_id in query_index.index.ids:
        vol = query_index.volumes[volume_id]
        hits = search(vindex.index, vol.vector, vindex.count)
        n_queries += 1
        for mode in modes:
            if mode == "flag":
                if vol.tumor_flag is None:
                    raise VolumeError(f"query volume {volume_id!r} lacks tumor_flag")
                predicate = flag_relevance(vol.tumor_flag)
            else:
                if vol.tumor_stage is None:
                    raise VolumeError(f"query volume {volume_id!r} lacks tumor_stage")
                predicate = stage_relevance(vol.tumor_stage)
            for cutoff in cutoffs:
                sums[mode][f"p@{cutoff}"] += precision_at_k(hits, predicate, cutoff)
            sums[mode]["ap"] += average_precision(hits, predicate)
    if n_queries == 0:
        raise VolumeError("no query volumes")
    header = ["mode", "p@3", "p@5", "p@10", "avgprec"]
    rows: list[list[object]] = [header]
    payload = {"method": args.method, "queries": n_queries, "modes": {}}
    for mode in modes:
        means = {key: value / n_queries for key, value in sums[mode].items()}
        rows.append([mode, means["p@3"], means["p@5"], means["p@10"], means["ap"]])
        payload["modes"][mode] = means
    _emit(args, rows, payload)
    return 0


def cmd_unicl_check(args: argparse.Namespace) -> int:
    temperatures = [float(t) for t in args.temperatures.split(",")]
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for batch_no in range(args.batches):
        n = int(rng.integers(2, args.max_n + 1))
        dim = int(rng.integers(2, args.max_dim + 1))
        temperature = temperatures[batch_no % len(temperatures)]
        batch = UniclBatch(
            image_embeddings=rng.normal(size=(n, dim)),
            text_embeddings=rng.normal(size=(n, dim)),
            targets=tuple(int(t) for t in rng.integers(0, max(2, n // 2 + 1), size=n)),
            temperature=temperature,
        )
        worst = max(worst, finite_diff_check(batch, epsilon=args.epsilon))
    rows = [["batches", args.batches], ["max_rel_error", worst], ["tolerance", args.tolerance]]
    payload = {"batches": args.batches, "max_rel_error": worst, "tolerance": args.tolerance}
    _emit(args, rows, payload)
    if worst > args.tolerance:
        _info(args, f"gradient check failed: {worst} > {args.tolerance}")
        return 1
    return 0


def cmd_unicl_train(args: argparse.Namespace) -> int:
    spec = ClusterSpec(
        n_clusters=args.clusters,
        dimension=args.dim,
        separation=args.separation,
    )
    config = TrainConfig(
        steps=args.steps,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        embed_dim=args.embed_dim,
        temperature=args.temperature,
        seed=args.seed,
        n_clusters=args.clusters,
    )
    result = toy_train(batch_sampler(spec), config)
    if args.trace:
        export_trace(result.trace, args.trace)
        _info(args, f"trace written to {args.trace}")
    first = result.trace[0]
    final = result.smoothed_trace[-1]
    drop = 0.0 if first == 0 else (first - final) / abs(first)
    rows = [["first_loss", first], ["final_loss", final], ["drop_fraction", drop]]
    payload = {"first_loss": first, "final_loss": final, "drop_fraction": drop}
    _emit(args, rows, payload)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(max_body_mb=args.max_body_mb)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning" if args.quiet else "info")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evisearch",
        description="Embedding retrieval, evidence-based classification, and evaluation.",
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for all random choices")
    parser.add_argument("--quiet", action="store_true", help="suppress diagnostics on stderr")
    parser.add_argument("--format", choices=("tsv", "json"), default="tsv")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus file, optionally snapshot it")
    p.add_argument("input")
    p.add_argument("--out", help="write a checksummed snapshot here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="deterministic database/validation/test split")
    p.add_argument("input")
    p.add_argument("--ratios", default="0.64,0.16,0.20")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("index", help="build an index and report stats")
    p.add_argument("input")
    p.add_argument("--all", action="store_true", help="index every record, ignore split tags")
    p.add_argument("--out", help="snapshot the indexed subset here")
    p.set_defaults(func=cmd_index)

    def add_query_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--query", help="comma- or space-separated vector")
        p.add_argument("--query-file", help="file with one vector per line")

    p = sub.add_parser("search", help="top-k nearest records by dot product")
    p.add_argument("--db", required=True)
    add_query_flags(p)
    p.add_argument("--k", type=int, default=DEFAULT_CLASSIFY_K)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("classify", help="weighted-vote class probabilities")
    p.add_argument("--db")
    add_query_flags(p)
    p.add_argument("--k", type=int, default=DEFAULT_CLASSIFY_K)
    p.add_argument("--mode", choices=("knn", "zeroshot"), default="knn")
    p.add_argument("--head", help="classifier head file for zeroshot mode")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("regress", help="weighted-mode month prediction")
    p.add_argument("--db", required=True)
    add_query_flags(p)
    p.add_argument("--k", type=int, default=DEFAULT_REGRESS_K)
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("zeroshot", help="classify against text-anchor head")
    p.add_argument("--head", required=True)
    add_query_flags(p)
    p.set_defaults(func=cmd_zeroshot)

    p = sub.add_parser("evaluate", help="full evaluation report over a test set")
    p.add_argument("--db", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--k", type=int, default=DEFAULT_CLASSIFY_K)
    p.add_argument("--k-regress", type=int, default=DEFAULT_REGRESS_K)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--name", default="run")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("fairness", help="per-group mAUC over gender or age buckets")
    p.add_argument("--db", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--k", type=int, default=DEFAULT_CLASSIFY_K)
    p.add_argument("--grouping", choices=("gender", "age_bucket"), required=True)
    p.set_defaults(func=cmd_fairness)

    volumes = sub.add_parser("volumes", help="3D volume retrieval workflows")
    vsub = volumes.add_subparsers(dest="volumes_command", required=True)

    p = vsub.add_parser("index", help="aggregate slices into a volume index")
    p.add_argument("--db", required=True)
    p.add_argument("--method", choices=("median", "mean", "max", "stdev"), default="median")
    p.set_defaults(func=cmd_volumes_index)

    p = vsub.add_parser("search", help="retrieve volumes for a query volume")
    p.add_argument("--db", required=True)
    p.add_argument("--query-volume", required=True, help="record lines of query slices")
    p.add_argument("--method", choices=("median", "mean", "max", "stdev"), default="median")
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=cmd_volumes_search)

    p = vsub.add_parser("eval", help="precision table over query volumes")
    p.add_argument("--db", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--method", choices=("median", "mean", "max", "stdev"), default="median")
    p.set_defaults(func=cmd_volumes_eval)

    unicl = sub.add_parser("unicl", help="contrastive objective utilities")
    usub = unicl.add_subparsers(dest="unicl_command", required=True)

    p = usub.add_parser("check", help="finite-difference gradient verification")
    p.add_argument("--batches", type=int, default=100)
    p.add_argument("--max-n", type=int, default=8)
    p.add_argument("--max-dim", type=int, default=16)
    p.add_argument("--temperatures", default="0.1,1,5")
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.set_defaults(func=cmd_unicl_check)

    p = usub.add_parser("train", help="toy contrastive training on synthetic clusters")
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.2)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--clusters", type=int, default=3)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--embed-dim", type=int, default=8)
    p.add_argument("--separation", type=float, default=4.0)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--trace", help="write step<TAB>loss lines here")
    p.set_defaults(func=cmd_unicl_train)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default=os.environ.get("ES_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("ES_PORT", "8000")))
    p.add_argument("--max-body-mb", type=int, default=64)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
