"""Command-line interface. Exit codes: 0 success, 1 operational error
(message on stderr), 2 usage error (argparse)."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import report
from .chunking import (
    ChunkStrategy,
    chunk_to_dict,
    recursive_chunk,
    semantic_chunk,
    semantic_node_split,
    split_sentences,
)
from .config import AppConfig, load_config
from .embedding import embed_batch
from .errors import LitragError
from .evaluation import EvalStore, ExperimentTable, run_experiment
from .finetune import FinetuneDatasetManifest, build_nodes, export_dataset, generate_qa
from .index import PayloadKind, VectorIndex
from .ingest import ArxivClient, GrobidEndpoint, condense_query, extract_tei, fetch_pdf
from .ingest import load_questions as _load_questions
from .ingest.tei import parse_tei
from .pipeline import format_references, generate_answer
from .runtime import RuntimeStack, abstract_index_path, chunk_index_path
from .stats import significance_report

log = logging.getLogger("litrag")


def _add_config_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="path to config YAML (defaults apply if omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="litrag",
                                     description="Academic-literature RAG engine and evaluation harness")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="harvest articles for a question set")
    _add_config_flag(p)
    p.add_argument("--questions", required=True, help="question fixture (JSONL)")
    p.add_argument("--max-articles", type=int, default=None,
                   help="articles per question (default from config)")
    p.add_argument("--skip-pdf", action="store_true", help="stop after metadata")
    p.add_argument("--skip-grobid", action="store_true", help="stop after PDFs")

    p = sub.add_parser("chunk", help="segment the clean corpus")
    _add_config_flag(p)
    p.add_argument("--strategy", choices=[s.value for s in ChunkStrategy],
                   default=ChunkStrategy.SEMANTIC.value)

    p = sub.add_parser("index", help="embed and index abstracts + chunks")
    _add_config_flag(p)
    p.add_argument("--strategy", choices=["semantic", "recursive"], default="semantic")

    p = sub.add_parser("ask", help="answer one question")
    _add_config_flag(p)
    p.add_argument("--question", required=True)
    p.add_argument("--retrieval", choices=["direct", "abstract-first"], default=None)
    p.add_argument("--prompt", choices=["baseline", "enhanced"], default=None)
    p.add_argument("--chunk-k", type=int, default=None)
    p.add_argument("--abstract-k", type=int, default=None)
    p.add_argument("--show-context", action="store_true")

    p = sub.add_parser("eval", help="run the replication experiment")
    _add_config_flag(p)
    p.add_argument("--questions", required=True)
    p.add_argument("--config-set", default="baseline,enhanced",
                   help="comma-separated config labels")
    p.add_argument("--replications", type=int, default=30)
    p.add_argument("--out", default=None, help="output dir (default: config eval_dir)")

    p = sub.add_parser("stats", help="Welch ANOVA + Tukey HSD over eval records")
    _add_config_flag(p)
    p.add_argument("--eval-dir", default=None)
    p.add_argument("--metric", default="all",
                   choices=["all", "context_relevance", "faithfulness", "answer_relevance"])
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--aggregate", choices=["per-replication", "per-question"],
                   default="per-replication")

    p = sub.add_parser("calibrate-chunking", help="sweep percentiles, report chunk sizes")
    _add_config_flag(p)
    p.add_argument("--percentiles", default="80,85,90,95,99")
    p.add_argument("--out", default="calibration")

    p = sub.add_parser("export-finetune", help="build a fine-tune QA dataset")
    _add_config_flag(p)
    p.add_argument("--label", required=True, help="experiment label, e.g. 17TB+G+SNS")
    p.add_argument("--strategy", choices=["fixed-size", "semantic-node"],
                   default="semantic-node")
    p.add_argument("--cleaning", choices=["raw", "grobid"], default="grobid")
    p.add_argument("--pairs-per-node", type=int, default=2)
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="run the HTTP API")
    _add_config_flag(p)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)

    return parser


# --- commands -----------------------------------------------------------------


def cmd_ingest(config: AppConfig, args) -> int:
    stack = RuntimeStack(config)
    questions = _load_questions(args.questions)
    client = ArxivClient(endpoint=config.arxiv.endpoint,
                         page_size=config.arxiv.page_size,
                         delay_seconds=config.arxiv.delay_seconds)
    grobid = GrobidEndpoint(base_url=config.grobid.endpoint, timeout=config.grobid.timeout)
    max_articles = args.max_articles or config.arxiv.max_articles_per_query

    total_new = 0
    for question in questions:
        query = condense_query(question, stack.llm)
        metas = client.search_articles(query, max_results=max_articles)
        added = stack.store.save_metas(metas)
        total_new += added
        log.info("question %s: query %r, %d articles (%d new corpus-wide)",
                 question.id, query.text, len(metas), added)
    print(f"metadata: {total_new} new articles "
          f"({len(stack.store.load_metas())} total in corpus)")
    if args.skip_pdf:
        return 0

    metas = stack.store.load_metas()

    def fetch_one(meta):
        if not meta.pdf_url:
            return None
        return fetch_pdf(meta, stack.store)

    with ThreadPoolExecutor(max_workers=config.ingest_workers) as pool:
        handles = [h for h in pool.map(fetch_one, metas) if h is not None]
    print(f"pdf: {len(handles)} stored")
    if args.skip_grobid:
        return 0

    def extract_one(handle):
        tei = extract_tei(handle, grobid)
        stack.store.save_tei(handle.article_id, tei)
        return handle.article_id

    with ThreadPoolExecutor(max_workers=config.ingest_workers) as pool:
        extracted = list(pool.map(extract_one, handles))
    print(f"tei: {len(extracted)} extracted")

    metas_by_id = {m.article_id: m for m in metas}
    cleaned = 0
    for article_id in extracted:
        doc = parse_tei(stack.store.load_tei(article_id), metas_by_id[article_id])
        stack.store.save_clean(doc)
        cleaned += 1
    print(f"clean: {cleaned} documents")
    return 0


def cmd_chunk(config: AppConfig, args) -> int:
    stack = RuntimeStack(config)
    strategy = ChunkStrategy(args.strategy)
    docs = stack.store.iter_clean()
    if not docs:
        print("no clean documents in corpus; run `litrag ingest` first", file=sys.stderr)
        return 1
    out_path = stack.store.chunks_path(strategy.value)
    n = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for doc in docs:
            if strategy is ChunkStrategy.RECURSIVE:
                chunks = recursive_chunk(doc.body_text(), config.chunking,
                                         article_id=doc.meta.article_id)
            elif strategy is ChunkStrategy.SEMANTIC_NODE:
                chunks = semantic_node_split(doc, stack.provider, config.chunking,
                                             stack.cache)
            else:
                sentences = split_sentences(doc.body_text())
                if not sentences:
                    continue
                chunks = semantic_chunk(sentences, stack.provider, config.chunking,
                                        article_id=doc.meta.article_id, cache=stack.cache)
            for chunk in chunks:
                fh.write(json.dumps(chunk_to_dict(chunk), ensure_ascii=False) + "\n")
                n += 1
    print(f"{n} chunks ({strategy.value}) -> {out_path}")
    return 0


def cmd_index(config: AppConfig, args) -> int:
    stack = RuntimeStack(config)
    strategy = ChunkStrategy(args.strategy)
    metas = [m for m in stack.store.load_metas() if m.abstract]
    if not metas:
        print("no article metadata with abstracts; run `litrag ingest` first",
              file=sys.stderr)
        return 1

    abstract_index = VectorIndex(stack.provider.dim)
    vectors = embed_batch([m.abstract for m in metas], stack.provider, stack.cache)
    for meta, vec in zip(metas, vectors):
        abstract_index.insert(vec, meta.article_id, PayloadKind.ABSTRACT, meta.article_id)
    apath = abstract_index_path(stack.index_dir)
    abstract_index.save(apath)
    print(f"abstract index: {len(abstract_index)} records -> {apath}")

    chunks = list(stack.load_chunks(strategy).values())
    if not chunks:
        print(f"no chunks for strategy {strategy.value}; run `litrag chunk` first",
              file=sys.stderr)
        return 1
    chunk_index = VectorIndex(stack.provider.dim)
    vectors = embed_batch([c.text for c in chunks], stack.provider, stack.cache)
    for chunk, vec in zip(chunks, vectors):
        chunk_index.insert(vec, chunk.article_id, PayloadKind.CHUNK, chunk.chunk_id)
    cpath = chunk_index_path(stack.index_dir, strategy)
    chunk_index.save(cpath)
    print(f"chunk index: {len(chunk_index)} records -> {cpath}")
    return 0


def cmd_ask(config: AppConfig, args) -> int:
    stack = RuntimeStack(config)
    overrides = {}
    if args.retrieval:
        overrides["retrieval"] = args.retrieval
    if args.prompt:
        overrides["prompt"] = args.prompt
    if args.chunk_k:
        overrides["chunk_k"] = args.chunk_k
    if args.abstract_k:
        overrides["abstract_k"] = args.abstract_k
    pipeline_config = config.pipeline
    if overrides:
        from .config import _pipeline_config, _pipeline_dict
        pipeline_config = _pipeline_config({**_pipeline_dict(config.pipeline), **overrides})

    retriever = stack.retriever(pipeline_config.chunk_strategy)
    answer = generate_answer(args.question, retriever, pipeline_config, stack.llm)
    print(answer.text)
    print(format_references(answer.references))
    if args.show_context:
        print("\nCONTEXT")
        for sc in answer.context.chunks:
            print(f"\n[score {sc.score:.4f}] ({sc.chunk.article_id}) {sc.chunk.text}")
    return 0


def cmd_eval(config: AppConfig, args) -> int:
    stack = RuntimeStack(config)
    questions = _load_questions(args.questions)
    labels = [lab.strip() for lab in args.config_set.split(",") if lab.strip()]
    out_dir = Path(args.out) if args.out else stack.eval_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    lock = out_dir / ".lock"
    try:
        lock_fd = lock.open("x")
    except FileExistsError:
        print(f"eval already running (lock file {lock}); remove it if stale",
              file=sys.stderr)
        return 1
    try:
        table = ExperimentTable()
        for label in labels:
            pipeline_config = config.pipeline_for(label)
            retriever = stack.retriever(pipeline_config.chunk_strategy)
            store = EvalStore(out_dir, label)
            result = run_experiment(
                questions, pipeline_config, label, args.replications, retriever,
                stack.llm, stack.judge, n_questions=config.judge.n_questions,
                store=store, workers=config.eval_workers)
            table.merge(result)
            cs = result.configs[label]
            print(f"{label}: {len(cs.word_counts)} records "
                  f"({cs.failures} failures, missing: {cs.missing})")
        csv_path = report.write_table_csv(table, out_dir / "tables.csv")
        fig_path = report.render_metric_bars(table, out_dir / "metrics.png")
        print(f"tables -> {csv_path}\nfigure -> {fig_path}")
        print(table.to_csv(), end="")
    finally:
        lock_fd.close()
        lock.unlink(missing_ok=True)
    return 0


def _samples_for_stats(eval_dir: Path, aggregate: str) -> dict[str, dict[str, list[float]]]:
    from .evaluation import METRIC_KEYS, EvalStore

    out: dict[str, dict[str, list[float]]] = {}
    for sub in sorted(p for p in eval_dir.iterdir() if p.is_dir()):
        records = EvalStore(eval_dir, sub.name).load_records()
        if not records:
            continue
        records.sort(key=lambda r: (r.question_id, r.replication))
        samples: dict[str, list[float]] = {k: [] for k in METRIC_KEYS}
        if aggregate == "per-replication":
            for r in records:
                for k in METRIC_KEYS:
                    v = getattr(r.scores, k)
                    if v is not None:
                        samples[k].append(v)
        else:  # per-question means
            by_q: dict[str, list] = {}
            for r in records:
                by_q.setdefault(r.question_id, []).append(r)
            for qid in sorted(by_q):
                for k in METRIC_KEYS:
                    vals = [getattr(r.scores, k) for r in by_q[qid]
                            if getattr(r.scores, k) is not None]
                    if vals:
                        samples[k].append(float(np.mean(vals)))
        out[sub.name] = samples
    return out


def cmd_stats(config: AppConfig, args) -> int:
    eval_dir = Path(args.eval_dir) if args.eval_dir else Path(config.eval_dir)
    if not eval_dir.exists():
        print(f"eval dir {eval_dir} not found", file=sys.stderr)
        return 1
    samples = _samples_for_stats(eval_dir, args.aggregate)
    if len(samples) < 2:
        print("need records for at least 2 configs; run `litrag eval` first",
              file=sys.stderr)
        return 1
    metrics = (["context_relevance", "faithfulness", "answer_relevance"]
               if args.metric == "all" else [args.metric])
    rep = significance_report(samples, metrics, alpha=args.alpha)
    csv_path = eval_dir / "significance.csv"
    csv_path.write_text(rep.to_csv(), encoding="utf-8")
    fig_path = report.render_significance_heatmap(rep, eval_dir / "significance.png")
    print(rep.to_text())
    print(f"csv -> {csv_path}\nfigure -> {fig_path}")
    return 0


def cmd_calibrate(config: AppConfig, args) -> int:
    import dataclasses

    stack = RuntimeStack(config)
    docs = stack.store.iter_clean()
    if not docs:
        print("no clean documents in corpus", file=sys.stderr)
        return 1
    percentiles = [float(p) for p in args.percentiles.split(",")]
    rows = []
    for pct in percentiles:
        params = dataclasses.replace(config.chunking, threshold_percentile=pct)
        counts = []
        for doc in docs:
            sentences = split_sentences(doc.body_text())
            if not sentences:
                continue
            chunks = semantic_chunk(sentences, stack.provider, params,
                                    article_id=doc.meta.article_id, cache=stack.cache)
            counts.extend(c.word_count for c in chunks)
        mean_words = float(np.mean(counts)) if counts else 0.0
        rows.append((pct, mean_words, len(counts)))
        print(f"percentile {pct:5.1f}: mean chunk words {mean_words:8.2f}, "
              f"chunks {len(counts)}")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "chunking_calibration.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("percentile,mean_chunk_words,chunks\n")
        for pct, mean_words, count in rows:
            fh.write(f"{pct},{mean_words:.2f},{count}\n")
    fig_path = report.render_calibration_curve(rows, out_dir / "chunking_calibration.png")
    print(f"csv -> {csv_path}\nfigure -> {fig_path}")
    return 0


def cmd_export_finetune(config: AppConfig, args) -> int:
    stack = RuntimeStack(config)
    docs = stack.store.iter_clean()
    if not docs:
        print("no clean documents in corpus", file=sys.stderr)
        return 1
    pairs = []
    for doc in docs:
        nodes = build_nodes(doc, args.strategy, config.chunking,
                            provider=stack.provider, cache=stack.cache)
        for node in nodes:
            pairs.extend(generate_qa(node, stack.llm, args.pairs_per_node))
    if not pairs:
        print("no QA pairs produced", file=sys.stderr)
        return 1
    manifest = FinetuneDatasetManifest(
        label=args.label, node_strategy=args.strategy, cleaning=args.cleaning,
        pair_count=0, sources=[])
    path = export_dataset(pairs, manifest, args.out)
    print(f"{manifest.pair_count} pairs -> {path}")
    return 0


def cmd_serve(config: AppConfig, args) -> int:
    import uvicorn

    from .server import create_app

    host = args.host or config.server.host
    port = args.port or config.server.port
    app = create_app(config)
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "chunk": cmd_chunk,
    "index": cmd_index,
    "ask": cmd_ask,
    "eval": cmd_eval,
    "stats": cmd_stats,
    "calibrate-chunking": cmd_calibrate,
    "export-finetune": cmd_export_finetune,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        return _COMMANDS[args.command](config, args)
    except (LitragError, FileNotFoundError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
