"""Runtime wiring: build providers, clients, stores, and the retriever from
an AppConfig. The CLI and HTTP server share this stack, so both paths run
identical pipeline code."""

from __future__ import annotations

import json
import logging
from pathlib import Path

from .chunking import Chunk, ChunkStrategy, chunk_from_dict
from .config import AppConfig, JudgeConfig
from .embedding import EmbeddingCache, EmbeddingProvider, make_provider
from .evaluation import HeuristicJudge, Judge, LlmJudge
from .index import VectorIndex
from .ingest.store import CorpusStore
from .llm import HttpLlmClient, LlmClient, LlmConfig, make_llm
from .pipeline import Retriever

log = logging.getLogger(__name__)


def make_judge(config: JudgeConfig) -> Judge:
    if config.kind == "heuristic":
        return HeuristicJudge()
    if config.kind == "http":
        llm = HttpLlmClient(LlmConfig(
            kind="http", model_id=config.model_id, endpoint=config.endpoint,
            api_key_env=config.api_key_env,
            max_calls_per_minute=config.max_calls_per_minute))
        return LlmJudge(llm)
    raise ValueError(f"unknown judge kind: {config.kind}")


def chunk_index_path(index_dir: str | Path, strategy: ChunkStrategy) -> Path:
    index_dir = Path(index_dir)
    if strategy is ChunkStrategy.SEMANTIC:
        return index_dir / "chunks.vx"
    return index_dir / f"chunks-{strategy.value}.vx"


def abstract_index_path(index_dir: str | Path) -> Path:
    return Path(index_dir) / "abstracts.vx"


class RuntimeStack:
    def __init__(self, config: AppConfig, base_dir: str | Path = "."):
        self.config = config
        self.base = Path(base_dir)
        self.store = CorpusStore(self.base / config.corpus_dir)
        self.provider: EmbeddingProvider = make_provider(config.embedding)
        cache_dir = config.embedding.cache_dir or config.cache_dir
        self.cache = EmbeddingCache(self.base / cache_dir, config.embedding.model_id)
        self.llm: LlmClient = make_llm(config.llm)
        self.judge: Judge = make_judge(config.judge)
        self._chunk_indexes: dict[ChunkStrategy, VectorIndex] = {}
        self._abstract_index: VectorIndex | None = None
        self._chunks: dict[ChunkStrategy, dict[str, Chunk]] = {}
        self._metas = None

    @property
    def index_dir(self) -> Path:
        return self.base / self.config.index_dir

    @property
    def eval_dir(self) -> Path:
        return self.base / self.config.eval_dir

    def metas_by_id(self) -> dict:
        if self._metas is None:
            self._metas = {m.article_id: m for m in self.store.load_metas()}
        return self._metas

    def load_chunks(self, strategy: ChunkStrategy) -> dict[str, Chunk]:
        if strategy not in self._chunks:
            path = self.store.chunks_path(strategy.value)
            if not path.exists():
                raise FileNotFoundError(
                    f"no chunks for strategy {strategy.value!r}; run `litrag chunk` first")
            chunks = {}
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        chunk = chunk_from_dict(json.loads(line))
                        chunks[chunk.chunk_id] = chunk
            self._chunks[strategy] = chunks
        return self._chunks[strategy]

    def chunk_index(self, strategy: ChunkStrategy) -> VectorIndex:
        if strategy not in self._chunk_indexes:
            path = chunk_index_path(self.index_dir, strategy)
            if not path.exists():
                raise FileNotFoundError(
                    f"missing index {path}; run `litrag index` first")
            self._chunk_indexes[strategy] = VectorIndex.load(path)
        return self._chunk_indexes[strategy]

    def abstract_index(self) -> VectorIndex:
        if self._abstract_index is None:
            path = abstract_index_path(self.index_dir)
            if not path.exists():
                raise FileNotFoundError(
                    f"missing index {path}; run `litrag index` first")
            self._abstract_index = VectorIndex.load(path)
        return self._abstract_index

    def retriever(self, strategy: ChunkStrategy | None = None,
                  need_abstracts: bool = True) -> Retriever:
        strategy = strategy or self.config.pipeline.chunk_strategy
        abstract_index = None
        if need_abstracts:
            try:
                abstract_index = self.abstract_index()
            except FileNotFoundError:
                log.warning("abstract index missing; abstract-first retrieval disabled")
        return Retriever(
            chunk_index=self.chunk_index(strategy),
            chunks_by_id=self.load_chunks(strategy),
            abstract_index=abstract_index,
            metas_by_id=self.metas_by_id(),
            provider=self.provider,
            cache=self.cache,
        )
