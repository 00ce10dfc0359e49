"""Fine-tune dataset construction: node splitting, LLM question generation,
and JSON Lines export for an external embedding-training stack.

Training itself is out of scope; the export uses the `query`/`positive`
field names common sentence-embedding fine-tuning loaders expect.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .chunking import Chunk, ChunkingParams, recursive_chunk, semantic_node_split
from .embedding import EmbeddingCache, EmbeddingProvider
from .errors import IoFailure
from .ingest.tei import CleanDocument
from .llm import LlmClient
from .textutil import parse_numbered_lines

log = logging.getLogger(__name__)

DEFAULT_PAIRS_PER_NODE = 2

NODE_STRATEGIES = ("fixed-size", "semantic-node")


@dataclass(frozen=True)
class QaPair:
    question: str
    node_id: str
    node_text: str
    source_doc: str
    generator_model: str


@dataclass
class FinetuneDatasetManifest:
    label: str
    node_strategy: str
    cleaning: str  # "raw" | "grobid"
    pair_count: int
    sources: list[str]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "node_strategy": self.node_strategy,
            "cleaning": self.cleaning,
            "pair_count": self.pair_count,
            "sources": self.sources,
        }


def build_nodes(doc: CleanDocument, strategy: str, params: ChunkingParams,
                provider: EmbeddingProvider | None = None,
                cache: EmbeddingCache | None = None) -> list[Chunk]:
    """Split a document into nodes: fixed-size packing or per-section
    semantic splitting. Empty documents yield no nodes."""
    if strategy not in NODE_STRATEGIES:
        raise ValueError(f"unknown node strategy {strategy!r}")
    text = doc.body_text().strip()
    if not text:
        return []
    if strategy == "fixed-size":
        return recursive_chunk(text, params, article_id=doc.meta.article_id)
    if provider is None:
        raise ValueError("semantic-node strategy requires an embedding provider")
    return semantic_node_split(doc, provider, params, cache)


def _qa_prompt() -> str:
    return resources.files("litrag.assets.prompts").joinpath(
        "qa_generation_v1.txt").read_text(encoding="utf-8")


def generate_qa(node: Chunk, llm: LlmClient,
                pairs_per_node: int = DEFAULT_PAIRS_PER_NODE) -> list[QaPair]:
    """Ask the LLM for questions answerable from the node text.

    At most pairs_per_node questions are kept; responses that are not a
    numbered list contribute nothing (warning logged).
    """
    if pairs_per_node < 1:
        raise ValueError("pairs_per_node must be >= 1")
    raw = llm.complete(_qa_prompt().format(passage=node.text, n=pairs_per_node))
    items = parse_numbered_lines(raw)
    if not items:
        log.warning("no parseable questions for node %s; response dropped", node.chunk_id)
        return []
    pairs = []
    for _, question in items[:pairs_per_node]:
        pairs.append(QaPair(
            question=question,
            node_id=node.chunk_id,
            node_text=node.text,
            source_doc=node.article_id,
            generator_model=llm.model_id,
        ))
    return pairs


def export_dataset(pairs: list[QaPair], manifest: FinetuneDatasetManifest,
                   path: str | Path) -> Path:
    """Write pairs as JSON Lines ({query, positive, node_id, source}) and the
    manifest alongside (<path>.manifest.json). Returns the dataset path."""
    if not pairs:
        raise ValueError("pairs must be non-empty")
    path = Path(path)
    manifest.pair_count = len(pairs)
    manifest.sources = sorted({p.source_doc for p in pairs})
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for pair in pairs:
                fh.write(json.dumps({
                    "query": pair.question,
                    "positive": pair.node_text,
                    "node_id": pair.node_id,
                    "source": pair.source_doc,
                }, ensure_ascii=False) + "\n")
        manifest_path = path.with_name(path.name + ".manifest.json")
        manifest_path.write_text(json.dumps(manifest.to_dict(), indent=2) + "\n",
                                 encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"could not write dataset to {path}: {exc}") from exc
    return path


def read_dataset(path: str | Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out
