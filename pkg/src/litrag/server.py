"""HTTP API over the same pipeline code the CLI uses.

Endpoints (all JSON; errors as {error, code}):
  POST /api/ask         question + config overrides -> answer, references,
                        scored chunks, context word count
  GET  /api/corpus/stats
  GET  /api/configs
  POST /api/eval/score  on-demand metric scoring of one turn
Providers being unreachable yields 503/provider_unavailable; malformed
bodies yield 400/bad_request.
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .chunking import ChunkStrategy
from .config import AppConfig, _pipeline_config, _pipeline_dict
from .errors import (
    EmptyIndex,
    JudgeUnavailable,
    JudgeUnparseable,
    LitragError,
    LlmUnavailable,
    ProviderUnavailable,
    ZeroClaims,
)
from .evaluation import score_answer
from .ingest.store import meta_to_dict
from .pipeline import generate_answer
from .runtime import RuntimeStack
from .textutil import word_count

log = logging.getLogger(__name__)

_UNAVAILABLE = (ProviderUnavailable, LlmUnavailable, JudgeUnavailable)


class ConfigOverrides(BaseModel):
    retrieval: str | None = None
    prompt: str | None = None
    chunk_k: int | None = None
    abstract_k: int | None = None
    chunk_strategy: str | None = None


class AskRequest(BaseModel):
    question: str = Field(min_length=1)
    overrides: ConfigOverrides | None = None


class ScoreRequest(BaseModel):
    question: str = Field(min_length=1)
    answer: str = Field(min_length=1)
    chunks: list[str]


def _resolve_pipeline(config: AppConfig, overrides: ConfigOverrides | None):
    base = _pipeline_dict(config.pipeline)
    if overrides is not None:
        for key, value in overrides.model_dump(exclude_none=True).items():
            base[key] = value
    return _pipeline_config(base)


def create_app(config: AppConfig, stack: RuntimeStack | None = None) -> FastAPI:
    app = FastAPI(title="litrag", version="0.1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    stack = stack or RuntimeStack(config)

    @app.exception_handler(RequestValidationError)
    async def bad_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"error": str(exc.errors()[:1]), "code": "bad_request"})

    @app.exception_handler(LitragError)
    async def litrag_error(request: Request, exc: LitragError):
        if isinstance(exc, _UNAVAILABLE):
            return JSONResponse(status_code=503,
                                content={"error": str(exc), "code": "provider_unavailable"})
        if isinstance(exc, EmptyIndex):
            return JSONResponse(status_code=503,
                                content={"error": str(exc), "code": "index_missing"})
        return JSONResponse(status_code=500,
                            content={"error": str(exc), "code": "internal"})

    @app.exception_handler(FileNotFoundError)
    async def missing_artifact(request: Request, exc: FileNotFoundError):
        return JSONResponse(status_code=503,
                            content={"error": str(exc), "code": "index_missing"})

    @app.exception_handler(ValueError)
    async def invalid_value(request: Request, exc: ValueError):
        # e.g. overrides violating abstract_k >= chunk_k >= 1
        return JSONResponse(status_code=400,
                            content={"error": str(exc), "code": "bad_request"})

    @app.post("/api/ask")
    def ask(body: AskRequest):
        pipeline_config = _resolve_pipeline(config, body.overrides)
        retriever = stack.retriever(pipeline_config.chunk_strategy)
        answer = generate_answer(body.question, retriever, pipeline_config, stack.llm)
        return {
            "answer": answer.text,
            "references": [meta_to_dict(m) for m in answer.references],
            "chunks": [
                {
                    "chunk_id": sc.chunk.chunk_id,
                    "article_id": sc.chunk.article_id,
                    "text": sc.chunk.text,
                    "score": sc.score,
                    "word_count": sc.chunk.word_count,
                }
                for sc in answer.context.chunks
            ],
            "word_count": answer.context.total_word_count,
            "config": _pipeline_dict(pipeline_config),
        }

    @app.get("/api/corpus/stats")
    def corpus_stats():
        store = stack.store
        chunk_counts = {}
        for strategy in ChunkStrategy:
            path = store.chunks_path(strategy.value)
            if path.exists():
                with open(path, encoding="utf-8") as fh:
                    chunk_counts[strategy.value] = sum(1 for line in fh if line.strip())
        index_sizes = {}
        for name, path in (("abstracts", stack.index_dir / "abstracts.vx"),
                           ("chunks", stack.index_dir / "chunks.vx")):
            if Path(path).exists():
                from .index import VectorIndex
                index_sizes[name] = len(VectorIndex.load(path))
        return {
            "articles": len(store.load_metas()),
            "clean_documents": len(list((store.root / "clean").glob("*.json"))),
            "chunks": chunk_counts,
            "indexes": index_sizes,
        }

    @app.get("/api/configs")
    def configs():
        return {
            "default": _pipeline_dict(config.pipeline),
            "labeled": config.configs,
            "retrieval_modes": ["direct", "abstract-first"],
            "prompt_variants": ["baseline", "enhanced"],
            "chunk_strategies": ["semantic", "recursive"],
        }

    @app.post("/api/eval/score")
    def eval_score(body: ScoreRequest):
        joined = "\n\n".join("• " + text for text in body.chunks)
        total_words = sum(word_count(text) for text in body.chunks)
        try:
            scores, _verdict = score_answer(
                body.question, body.answer, joined, total_words, stack.judge,
                stack.provider, n_questions=config.judge.n_questions,
                cache=stack.cache)
        except (ZeroClaims, JudgeUnparseable) as exc:
            return JSONResponse(status_code=422,
                                content={"error": str(exc), "code": "unscorable"})
        return {
            "context_relevance": scores.context_relevance,
            "faithfulness": scores.faithfulness,
            "answer_relevance": scores.answer_relevance,
            "context_word_count": scores.context_word_count,
        }

    static_dir = config.server.static_dir
    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
