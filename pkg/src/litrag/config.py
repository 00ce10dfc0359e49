"""Application configuration: one YAML file, validated at load, unknown keys
rejected, ${ENV_VAR} interpolation in string values for secrets."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .chunking import ChunkingParams, ChunkStrategy
from .embedding import EmbeddingProviderConfig
from .llm import LlmConfig
from .pipeline import PipelineConfig, PromptVariant, RetrievalMode

_ENV_REF = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


@dataclass
class JudgeConfig:
    kind: str = "heuristic"  # "heuristic" | "http"
    model_id: str = "heuristic"
    endpoint: str | None = None
    api_key_env: str = "LITRAG_JUDGE_API_KEY"
    n_questions: int = 3
    max_calls_per_minute: int = 0

    def __post_init__(self):
        if self.kind == "http" and not self.endpoint:
            raise ValueError("http judge requires an endpoint")
        if self.n_questions < 1:
            raise ValueError("n_questions must be >= 1")


@dataclass
class ArxivConfig:
    endpoint: str = "http://export.arxiv.org/api/query"
    page_size: int = 100
    delay_seconds: float = 3.0
    max_articles_per_query: int = 100


@dataclass
class GrobidConfig:
    endpoint: str = "http://localhost:8070"
    timeout: float = 180.0


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8123
    static_dir: str | None = None


@dataclass
class AppConfig:
    corpus_dir: str = "corpus"
    index_dir: str = "index"
    eval_dir: str = "eval"
    cache_dir: str = "cache/embeddings"
    ingest_workers: int = 4
    eval_workers: int = 1
    embedding: EmbeddingProviderConfig = field(default_factory=EmbeddingProviderConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    judge: JudgeConfig = field(default_factory=JudgeConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    chunking: ChunkingParams = field(default_factory=ChunkingParams)
    arxiv: ArxivConfig = field(default_factory=ArxivConfig)
    grobid: GrobidConfig = field(default_factory=GrobidConfig)
    server: ServerConfig = field(default_factory=ServerConfig)
    configs: dict[str, dict] = field(default_factory=dict)

    def pipeline_for(self, label: str) -> PipelineConfig:
        """Resolve a named configuration (overrides on the default pipeline)."""
        if label not in self.configs:
            raise KeyError(f"unknown config label {label!r}; "
                           f"known: {sorted(self.configs)}")
        return _pipeline_config({**_pipeline_dict(self.pipeline), **self.configs[label]})


DEFAULT_CONFIG_SET = {
    "baseline": {"retrieval": "direct", "prompt": "baseline"},
    "enhanced": {"retrieval": "abstract-first", "prompt": "enhanced"},
}


def _interpolate(value):
    if isinstance(value, str):
        def sub(m):
            name = m.group(1)
            if name not in os.environ:
                raise ValueError(f"environment variable {name} referenced in config "
                                 f"but not set")
            return os.environ[name]
        return _ENV_REF.sub(sub, value)
    if isinstance(value, dict):
        return {k: _interpolate(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_interpolate(v) for v in value]
    return value


def _take(d: dict, allowed: set[str], section: str) -> dict:
    unknown = set(d) - allowed
    if unknown:
        raise ValueError(f"unknown config keys in {section}: {sorted(unknown)}")
    return d


def _pipeline_dict(p: PipelineConfig) -> dict:
    return {
        "retrieval": p.retrieval.value,
        "abstract_k": p.abstract_k,
        "chunk_k": p.chunk_k,
        "prompt": p.prompt.value,
        "chunk_strategy": p.chunk_strategy.value,
    }


def _pipeline_config(d: dict) -> PipelineConfig:
    _take(d, {"retrieval", "abstract_k", "chunk_k", "prompt", "chunk_strategy"},
          "pipeline")
    return PipelineConfig(
        retrieval=RetrievalMode(d.get("retrieval", "direct")),
        abstract_k=int(d.get("abstract_k", 100)),
        chunk_k=int(d.get("chunk_k", 5)),
        prompt=PromptVariant(d.get("prompt", "baseline")),
        chunk_strategy=ChunkStrategy(d.get("chunk_strategy", "semantic")),
    )


def load_config(path: str | Path | None = None) -> AppConfig:
    """Load and validate the config file; None yields all defaults."""
    raw: dict = {}
    if path is not None:
        loaded = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ValueError(f"config root must be a mapping, got {type(loaded).__name__}")
        raw = _interpolate(loaded)

    _take(raw, {"corpus_dir", "index_dir", "eval_dir", "cache_dir", "ingest_workers",
                "eval_workers", "embedding", "llm", "judge", "pipeline", "chunking",
                "arxiv", "grobid", "server", "configs"}, "top level")

    emb = _take(dict(raw.get("embedding", {})),
                {"kind", "model_id", "dim", "endpoint", "api_key_env", "cache_dir"},
                "embedding")
    llm = _take(dict(raw.get("llm", {})),
                {"kind", "model_id", "endpoint", "api_key_env",
                 "max_calls_per_minute", "timeout"}, "llm")
    judge = _take(dict(raw.get("judge", {})),
                  {"kind", "model_id", "endpoint", "api_key_env", "n_questions",
                   "max_calls_per_minute"}, "judge")
    chunking = _take(dict(raw.get("chunking", {})),
                     {"threshold_percentile", "min_chunk_words", "max_chunk_words",
                      "recursive_target_words", "recursive_overlap_words"}, "chunking")
    arxiv = _take(dict(raw.get("arxiv", {})),
                  {"endpoint", "page_size", "delay_seconds", "max_articles_per_query"},
                  "arxiv")
    grobid = _take(dict(raw.get("grobid", {})), {"endpoint", "timeout"}, "grobid")
    server = _take(dict(raw.get("server", {})), {"host", "port", "static_dir"}, "server")

    configs = dict(DEFAULT_CONFIG_SET)
    for label, overrides in dict(raw.get("configs", {})).items():
        _take(dict(overrides),
              {"retrieval", "abstract_k", "chunk_k", "prompt", "chunk_strategy"},
              f"configs.{label}")
        configs[label] = dict(overrides)

    return AppConfig(
        corpus_dir=raw.get("corpus_dir", "corpus"),
        index_dir=raw.get("index_dir", "index"),
        eval_dir=raw.get("eval_dir", "eval"),
        cache_dir=raw.get("cache_dir", "cache/embeddings"),
        ingest_workers=int(raw.get("ingest_workers", 4)),
        eval_workers=int(raw.get("eval_workers", 1)),
        embedding=EmbeddingProviderConfig(**emb),
        llm=LlmConfig(**llm),
        judge=JudgeConfig(**judge),
        pipeline=_pipeline_config(dict(raw.get("pipeline", {}))),
        chunking=ChunkingParams(**chunking),
        arxiv=ArxivConfig(**arxiv),
        grobid=GrobidConfig(**grobid),
        server=ServerConfig(**server),
        configs=configs,
    )
