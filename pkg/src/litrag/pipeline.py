"""Query-time path: embed the question, retrieve context (direct or
abstract-first), build a prompt variant, call the LLM, assemble the answer
with references.

The question embedding always uses the raw question text; condensation is
only for corpus harvesting. Abstract-first retrieval ranks the abstract
index first, then searches chunks restricted to the top-ranked articles.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .chunking import Chunk, ChunkStrategy
from .embedding import EmbeddingCache, EmbeddingProvider, embed_batch
from .errors import EmptyIndex
from .index import VectorIndex
from .ingest.arxiv import ArticleMeta
from .llm import LlmClient

log = logging.getLogger(__name__)

BASELINE_PROMPT = (
    "You are an assistant for question-answering tasks. Use the following "
    "pieces of the retrieved context to answer the question. If you don't "
    "know the answer, just say that you don't know. Use three sentences "
    "maximum and keep the answer concise."
)

ENHANCED_PROMPT = (
    "You are the best assistant for question-answering tasks. Your role is "
    "to answer the question excellently using the provided context. Use the "
    "following pieces of the retrieved context to answer the question. If "
    "you don't know the answer, just say that you don't know. Use three "
    "sentences maximum and keep the answer concise. I will tip you 1000 "
    "dollars for a perfect response."
)

CONTEXT_BULLET = "• "


class RetrievalMode(str, Enum):
    DIRECT = "direct"
    ABSTRACT_FIRST = "abstract-first"


class PromptVariant(str, Enum):
    BASELINE = "baseline"
    ENHANCED = "enhanced"


@dataclass(frozen=True)
class PipelineConfig:
    retrieval: RetrievalMode = RetrievalMode.DIRECT
    abstract_k: int = 100
    chunk_k: int = 5
    prompt: PromptVariant = PromptVariant.BASELINE
    chunk_strategy: ChunkStrategy = ChunkStrategy.SEMANTIC

    def __post_init__(self):
        if not self.abstract_k >= self.chunk_k >= 1:
            raise ValueError("need abstract_k >= chunk_k >= 1")

    def with_overrides(self, **kw) -> "PipelineConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class ScoredChunk:
    chunk: Chunk
    score: float


@dataclass(frozen=True)
class RetrievedContext:
    chunks: tuple[ScoredChunk, ...]  # descending score
    joined_text: str
    total_word_count: int


@dataclass(frozen=True)
class Answer:
    text: str
    references: tuple[ArticleMeta, ...]
    prompt_used: str
    context: RetrievedContext


class Retriever:
    """Read-only facade over the frozen indexes and chunk/meta lookups."""

    def __init__(self, chunk_index: VectorIndex, chunks_by_id: dict[str, Chunk],
                 abstract_index: VectorIndex | None = None,
                 metas_by_id: dict[str, ArticleMeta] | None = None,
                 provider: EmbeddingProvider | None = None,
                 cache: EmbeddingCache | None = None):
        self.chunk_index = chunk_index
        self.chunks_by_id = chunks_by_id
        self.abstract_index = abstract_index
        self.metas_by_id = metas_by_id or {}
        self.provider = provider
        self.cache = cache

    def embed_question(self, question_text: str) -> np.ndarray:
        return embed_batch([question_text], self.provider, self.cache)[0]

    def _context_from_hits(self, hits) -> RetrievedContext:
        scored = tuple(
            ScoredChunk(self.chunks_by_id[h.record.payload_ref], h.score) for h in hits
        )
        joined = "\n\n".join(CONTEXT_BULLET + sc.chunk.text for sc in scored)
        total = sum(sc.chunk.word_count for sc in scored)
        return RetrievedContext(chunks=scored, joined_text=joined, total_word_count=total)

    def retrieve_direct(self, question_text: str, config: PipelineConfig) -> RetrievedContext:
        query = self.embed_question(question_text)
        hits = self.chunk_index.top_k(query, config.chunk_k)
        return self._context_from_hits(hits)

    def retrieve_abstract_first(self, question_text: str,
                                config: PipelineConfig) -> RetrievedContext:
        if self.abstract_index is None:
            raise EmptyIndex("abstract index not loaded")
        query = self.embed_question(question_text)
        abstract_hits = self.abstract_index.top_k(query, config.abstract_k)
        allowed = {h.record.article_id for h in abstract_hits}
        hits = self.chunk_index.top_k(query, config.chunk_k, id_filter=allowed)
        if len(hits) < config.chunk_k:
            log.warning("abstract-first returned %d/%d chunks (allowed set %d articles)",
                        len(hits), config.chunk_k, len(allowed))
        for h in hits:
            assert h.record.article_id in allowed, "abstract-first subset violated"
        return self._context_from_hits(hits)

    def retrieve(self, question_text: str, config: PipelineConfig) -> RetrievedContext:
        if config.retrieval is RetrievalMode.ABSTRACT_FIRST:
            return self.retrieve_abstract_first(question_text, config)
        return self.retrieve_direct(question_text, config)


def build_prompt(question_text: str, context: RetrievedContext,
                 variant: PromptVariant) -> str:
    """Assemble the full prompt: template, bulleted context block, question."""
    template = ENHANCED_PROMPT if variant is PromptVariant.ENHANCED else BASELINE_PROMPT
    return (
        f"{template}\n\n"
        f"Context:\n{context.joined_text}\n\n"
        f"Question: {question_text}\n\n"
        f"Answer:"
    )


def assemble_references(context: RetrievedContext,
                        metas_by_id: dict[str, ArticleMeta]) -> tuple[ArticleMeta, ...]:
    """Deduplicated metas of context chunks, in first-appearance order."""
    seen: set[str] = set()
    refs: list[ArticleMeta] = []
    for sc in context.chunks:
        aid = sc.chunk.article_id
        if aid in seen:
            continue
        seen.add(aid)
        meta = metas_by_id.get(aid)
        if meta is None:
            meta = ArticleMeta(article_id=aid, title=aid, authors=(), abstract="",
                               published="", pdf_url=None, abstract_missing=True)
        refs.append(meta)
    return tuple(refs)


def generate_answer(question_text: str, retriever: Retriever, config: PipelineConfig,
                    llm: LlmClient) -> Answer:
    context = retriever.retrieve(question_text, config)
    if not context.chunks:
        log.warning("empty retrieved context for question %r; answering anyway",
                    question_text[:60])
    prompt = build_prompt(question_text, context, config.prompt)
    text = llm.complete(prompt)
    refs = assemble_references(context, retriever.metas_by_id)
    return Answer(text=text, references=refs, prompt_used=prompt, context=context)


def format_references(references: tuple[ArticleMeta, ...]) -> str:
    """Render the REFERENCES block appended to CLI/UI answers."""
    if not references:
        return ""
    lines = ["", "REFERENCES", ""]
    for meta in references:
        authors = ", ".join(meta.authors) if meta.authors else meta.article_id
        date = f" ({meta.published})" if meta.published else ""
        lines.append(f"{CONTEXT_BULLET}{authors}{date}. {meta.title}.")
    return "\n".join(lines)
